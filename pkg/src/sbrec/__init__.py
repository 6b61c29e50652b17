"""Two-step information reconciliation for continuous-variable QKD.

Inner stage: a very-low-rate multi-edge LDPC code decoded over the virtual
BPSK channel produced by multidimensional reconciliation.  Outer stage: a
high-rate syndrome code that repairs and verifies the concatenated key
after the frame-level accept/reject screen.
"""

from .channel import (ChannelError, SystemParams, awgn_sample, link_budget,
                      mutual_information, snr_for_mutual_information,
                      solve_va)
from .de import DeError, ThresholdResult, de_run, de_threshold
from .harness import (ConfigError, ExperimentConfig, FerTable, FrameResult,
                      crc_penalty_table, determinism_hash, emit_csv,
                      fer_sweep, frame_rng, make_config, parse_csv,
                      reconcile_experiment, run_experiment,
                      run_reconcile_once, skr_distance, threshold_experiment,
                      wilson_interval)
from .ldpc import (GirthWarning, LdpcError, ParityCheckMatrix, Protograph,
                   decode_bp, default_inner_protograph, encode, extract_info,
                   lift_for_blocklength, lift_protograph,
                   load_shipped_protograph, syndrome)
from .multidim import (DIMS, LLR_MAX, MappedMessage, MultidimError,
                       VirtualObservation, cd_conj, cd_inverse, cd_multiply,
                       demap, exact_llr, llr_from_observation, map_message)
from .outer import (OuterBatch, OuterCode, OuterError, ReconciliationFrame,
                    accumulate, expected_attempts, load_batch,
                    make_outer_code, outer_decode, outer_syndrome_exchange,
                    residual_ber, save_batch, undetected_error)
from .security import (SecurityError, SkrResult, beta_crc, beta_outer,
                       covariance_matrix, crc_beta_reduction, devetak_winter,
                       devetak_winter_at, finite_size_penalty, holevo_bound,
                       plob_bound, secret_key_rate)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
