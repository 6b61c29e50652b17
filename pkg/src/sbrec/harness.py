"""Simulation harness: configuration, seeding, sweeps, CSV emission.

Every experiment is driven by an :class:`ExperimentConfig` and a master
seed; each Monte-Carlo frame draws its randomness from a stream derived
from (master_seed, frame_index), so results are bit-identical no matter
how frames are scheduled across workers.
"""

import csv
import hashlib
import math
import time
import zlib
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import ldpc, multidim, outer, security
from .channel import SystemParams, snr_for_mutual_information, solve_va


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


EXPERIMENTS = ("crc-penalty", "fer-sweep", "skr-distance", "threshold",
               "reconcile")


@dataclass
class ExperimentConfig:
    experiment: str = "fer-sweep"
    base_matrix: str = ""          # path; empty -> shipped rate-1/50 code
    blocklength: int = 1000
    dim: int = 8
    n_crc: int = 0
    r_out: float = 0.999
    n_out: int = 100000
    n_privacy: float = 1e10
    max_iters: int = 0             # 0 -> 500 for N <= 1e4, else 200
    eta: float = 0.6
    xi_bob: float = 0.001
    nu_el: float = 0.01
    alpha_db_km: float = 0.2
    beta_grid: tuple = (0.90, 0.95, 0.99)
    distance_grid: tuple = (10.0, 50.0, 100.0, 140.0, 160.0)
    blocklength_grid: tuple = (1000, 2000, 5000, 10000, 100000, 1000000)
    n_crc_max: int = 32
    operating_beta: float = 0.99
    fer_table: str = ""            # CSV path with cached fer-sweep rows
    fer_override: float = -1.0     # >= 0 fixes FER analytically (no MC)
    min_frame_errors: int = 100
    max_frames: int = 200000
    point_timeout_s: float = 0.0   # 0 -> no timeout
    master_seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.blocklength < 50:
            raise ConfigError("blocklength must be >= 50")
        if self.min_frame_errors < 1:
            raise ConfigError("stop rule needs min_frame_errors >= 1")
        if self.max_frames < 1:
            raise ConfigError("max_frames must be >= 1")
        for name in ("beta_grid", "distance_grid", "blocklength_grid"):
            g = tuple(getattr(self, name))
            if len(g) == 0:
                raise ConfigError(f"{name} must be non-empty")
            if list(g) != sorted(g):
                raise ConfigError(f"{name} must be sorted ascending")
            object.__setattr__(self, name, g)
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def effective_max_iters(self):
        if self.max_iters > 0:
            return self.max_iters
        return 500 if self.blocklength <= 10000 else 200

    def system_params(self, distance_km=0.0, v_a=1.0):
        return SystemParams(eta=self.eta, xi_bob=self.xi_bob,
                            nu_el=self.nu_el, alpha_db_km=self.alpha_db_km,
                            distance_km=distance_km, v_a=v_a)


_GRID_KEYS = {"beta_grid", "distance_grid", "blocklength_grid"}


def parse_config_file(path):
    """Flat ``key = value`` file -> dict of typed config values."""
    out = {}
    valid = {f.name: f.type for f in fields(ExperimentConfig)}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key not in valid:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _coerce(key, val)
    return out


def _coerce(key, val):
    if key in _GRID_KEYS:
        parts = [p for p in val.replace(",", " ").split() if p]
        conv = int if key == "blocklength_grid" else float
        return tuple(conv(p) for p in parts)
    proto = getattr(ExperimentConfig, key, None)
    if isinstance(proto, bool):
        return val.lower() in ("1", "true", "yes")
    if isinstance(proto, int):
        return int(val)
    if isinstance(proto, float):
        return float(val)
    return val


def make_config(config_path=None, **overrides):
    """Config from an optional file plus keyword overrides (overrides win)."""
    kv = parse_config_file(config_path) if config_path else {}
    kv.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kv)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# code and rng plumbing


def load_code(cfg):
    """(protograph, lifted parity-check matrix) for the configured code."""
    if cfg.base_matrix:
        proto = ldpc.Protograph.from_file(cfg.base_matrix)
    else:
        proto = ldpc.default_inner_protograph()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ldpc.GirthWarning)
        h = ldpc.lift_for_blocklength(proto, cfg.blocklength,
                                      seed=cfg.master_seed % (2**31))
    return proto, h


def frame_rng(master_seed, frame_index):
    """Independent, scheduling-free RNG stream for one frame."""
    return np.random.default_rng(
        np.random.SeedSequence([int(master_seed), int(frame_index)]))


@dataclass
class FrameResult:
    index: int
    accepted: bool
    correct: bool
    iterations: int
    s: np.ndarray | None = None
    s_hat: np.ndarray | None = None

    @property
    def error(self):
        """Frame discarded or wrong: the event counted by the FER."""
        return not (self.accepted and self.correct)


def crc_check_value(bits, n_crc):
    """n_crc-bit hash of a bit vector, used as the per-frame screen."""
    if not 1 <= n_crc <= 32:
        raise ConfigError("n_crc must be in [1, 32]")
    return zlib.crc32(np.ascontiguousarray(bits, dtype=np.uint8)
                      .tobytes()) & ((1 << n_crc) - 1)


def run_reconcile_once(h, snr, dim, rng, max_iters, n_crc=0,
                       keep_payload=False):
    """One end-to-end inner frame at a fixed virtual-channel SNR.

    Encoder side draws info bits and quadratures; decoder side recovers the
    codeword from the mapped message.  Acceptance is the inner syndrome
    screen (decoder converged to a valid codeword) and, when ``n_crc`` is
    positive, a per-frame checksum that catches convergence to the wrong
    codeword with failure probability 2**-n_crc.
    """
    n = h.n
    sigma_z2 = 1.0 / snr
    s = rng.integers(0, 2, h.k).astype(np.uint8)
    c = ldpc.encode(h, s)
    u = 1.0 - 2.0 * c.astype(np.float64)
    x = rng.normal(0.0, math.sqrt(0.5), n)
    z = rng.normal(0.0, math.sqrt(sigma_z2 / 2.0), n)
    y = x + z
    m = multidim.map_message(u, y, dim)
    r = multidim.demap(m, x, dim)
    llr = multidim.llr_from_observation(r, sigma_z2)
    c_hat, converged, iters = ldpc.decode_bp(h, llr, max_iters)
    s_hat = ldpc.extract_info(h, c_hat)
    correct = converged and np.array_equal(c_hat, c)
    accepted = bool(converged)
    if accepted and n_crc > 0:
        accepted = crc_check_value(s_hat, n_crc) == crc_check_value(s, n_crc)
    res = FrameResult(index=0, accepted=accepted, correct=bool(correct),
                      iterations=iters)
    if keep_payload:
        res.s = s
        res.s_hat = s_hat
    return res


def _frame_batch(args):
    h, snr, dim, max_iters, n_crc, master_seed, indices = args
    out = []
    for i in indices:
        r = run_reconcile_once(h, snr, dim, frame_rng(master_seed, i),
                               max_iters, n_crc=n_crc)
        r.index = i
        out.append((i, r.error))
    return out


def wilson_interval(errors, frames, z=1.96):
    """Wilson score interval for a binomial proportion."""
    if frames == 0:
        return 0.0, 1.0
    p = errors / frames
    denom = 1.0 + z * z / frames
    center = (p + z * z / (2 * frames)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / frames
                                   + z * z / (4 * frames * frames))
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# experiments


def fer_point(cfg, h, beta, seed_offset=0, pool=None):
    """Monte-Carlo FER at one efficiency point, honoring the stop rule."""
    if h.n % cfg.dim != 0:
        raise ConfigError(f"blocklength {h.n} not a multiple of dim {cfg.dim}")
    rate = h.k / h.n
    snr = snr_for_mutual_information(rate / beta)
    max_iters = cfg.effective_max_iters
    errors = frames = 0
    start = time.perf_counter()
    timeout = False
    chunk = max(8, 4 * cfg.workers)
    next_index = 0
    while errors < cfg.min_frame_errors and frames < cfg.max_frames:
        if cfg.point_timeout_s > 0 and \
                time.perf_counter() - start > cfg.point_timeout_s:
            timeout = True
            break
        todo = min(chunk, cfg.max_frames - frames)
        indices = [seed_offset + next_index + j for j in range(todo)]
        next_index += todo
        if pool is not None:
            results = []
            batches = [(h, snr, cfg.dim, max_iters, cfg.n_crc,
                        cfg.master_seed, indices[j::cfg.workers])
                       for j in range(cfg.workers)]
            for part in pool.map(_frame_batch, batches):
                results.extend(part)
            results.sort()
        else:
            results = _frame_batch(
                (h, snr, cfg.dim, max_iters, cfg.n_crc, cfg.master_seed,
                 indices))
        for _, err in results:
            frames += 1
            errors += int(err)
            if errors >= cfg.min_frame_errors:
                break
    fer = errors / frames if frames else 0.0
    lo, hi = wilson_interval(errors, frames)
    return {
        "beta": beta, "snr": snr, "fer": fer, "fer_lo": lo, "fer_hi": hi,
        "frames": frames, "frame_errors": errors, "timeout": int(timeout),
        "wall_time_s": time.perf_counter() - start,
    }


def fer_sweep(cfg):
    """FER against reconciliation efficiency over the configured grid."""
    _, h = load_code(cfg)
    pool = None
    rows = []
    try:
        if cfg.workers > 1:
            pool = ProcessPoolExecutor(max_workers=cfg.workers)
        for i, beta in enumerate(cfg.beta_grid):
            point = fer_point(cfg, h, beta,
                              seed_offset=i * cfg.max_frames, pool=pool)
            row = _blank_row()
            row.update(experiment="fer-sweep", n=h.n, **point)
            rows.append(row)
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


class FerTable:
    """FER-vs-beta lookup, log-linear in FER between measured points."""

    def __init__(self, betas, fers):
        order = np.argsort(betas)
        self.betas = np.asarray(betas, dtype=np.float64)[order]
        self.fers = np.asarray(fers, dtype=np.float64)[order]
        if self.betas.size == 0:
            raise ConfigError("empty FER table")

    @classmethod
    def from_rows(cls, rows):
        pts = [(r["beta"], r["fer"]) for r in rows
               if r.get("experiment") == "fer-sweep"]
        if not pts:
            raise ConfigError("no fer-sweep rows in FER table input")
        return cls([p[0] for p in pts], [p[1] for p in pts])

    def fer_at(self, beta):
        logf = np.log(np.maximum(self.fers, 1e-12))
        return float(np.exp(np.interp(beta, self.betas, logf)))


def skr_distance(cfg, fer_table=None):
    """Secret-key rate over distance at the configured operating beta.

    The FER at the operating point comes from ``fer_override`` if set, else
    from a cached FER table; re-simulating per distance is pointless because
    the virtual channel depends only on beta for a fixed code.
    """
    beta = cfg.operating_beta
    if cfg.fer_override >= 0.0:
        fer = cfg.fer_override
    else:
        if fer_table is None:
            if not cfg.fer_table:
                raise ConfigError(
                    "skr-distance needs fer_override or a fer_table CSV")
            fer_table = FerTable.from_rows(parse_csv(cfg.fer_table))
        fer = fer_table.fer_at(beta)
    proto, _ = load_code(cfg)
    rate = proto.design_rate
    target_iab = rate / beta
    delta_n = security.finite_size_penalty(cfg.n_privacy)
    rows = []
    for dist in cfg.distance_grid:
        t0 = time.perf_counter()
        p0 = cfg.system_params(distance_km=dist)
        v_a = solve_va(p0, target_iab)
        p = replace(p0, v_a=v_a)
        iab = target_iab
        chi = security.holevo_bound(p)
        res = security.secret_key_rate(fer, beta, iab, chi, delta_n)
        row = _blank_row()
        row.update(
            experiment="skr-distance", n=cfg.blocklength, beta=beta,
            distance_km=dist, fer=fer, v_a=v_a, snr=None,
            iab=iab, chi_be=chi, delta_n=delta_n,
            skr=res.skr, skr_raw=res.raw, below_zero=int(res.below_zero),
            dw=security.devetak_winter(iab, chi),
            plob=security.plob_bound(p.transmittance),
            wall_time_s=time.perf_counter() - t0,
        )
        rows.append(row)
    return rows


def crc_penalty_table(cfg):
    """Analytic beta-reduction of a CRC, per blocklength and CRC size."""
    proto, _ = load_code(cfg)
    rate = proto.design_rate
    rows = []
    for n in cfg.blocklength_grid:
        for n_crc in range(1, cfg.n_crc_max + 1):
            row = _blank_row()
            row.update(
                experiment="crc-penalty", n=n, n_crc=n_crc,
                reduction_pct=100.0 * security.crc_beta_reduction(
                    rate, n, n_crc),
                wall_time_s=0.0,
            )
            rows.append(row)
    return rows


def threshold_experiment(cfg, tol=1e-4):
    """Density-evolution threshold of the configured base matrix."""
    from . import de
    proto, _ = load_code(cfg)
    t0 = time.perf_counter()
    res = de.de_threshold(proto, tol=tol)
    row = _blank_row()
    row.update(experiment="threshold", n=cfg.blocklength,
               snr_threshold=res.snr_threshold,
               beta_threshold=res.beta_threshold,
               wall_time_s=time.perf_counter() - t0)
    return [row]


def reconcile_experiment(cfg):
    """Full two-step protocol: accumulate a batch, exchange, outer-decode."""
    _, h = load_code(cfg)
    if h.n % cfg.dim != 0:
        raise ConfigError(f"blocklength {h.n} not a multiple of dim {cfg.dim}")
    if cfg.n_out % h.k != 0:
        raise ConfigError(f"n_out={cfg.n_out} not a multiple of k={h.k}")
    beta = cfg.operating_beta
    rate = h.k / h.n
    snr = snr_for_mutual_information(rate / beta)
    code = outer.make_outer_code(cfg.n_out, cfg.r_out)
    t0 = time.perf_counter()

    def stream():
        i = 0
        while True:
            r = run_reconcile_once(h, snr, cfg.dim,
                                   frame_rng(cfg.master_seed, i),
                                   cfg.effective_max_iters, n_crc=cfg.n_crc,
                                   keep_payload=True)
            yield outer.ReconciliationFrame(
                index=i, accepted=r.accepted, s=r.s, s_hat=r.s_hat)
            i += 1

    batch = outer.accumulate(stream(), cfg.n_out, h.k)
    p, key_cost = outer.outer_syndrome_exchange(batch, code)
    ber = outer.residual_ber(batch.w, batch.w_hat)
    _, converged = outer.outer_decode(batch, code, p)
    exact = converged and np.array_equal(batch.w_hat_corrected, batch.w)
    fer_est = 1.0 - batch.a_frames / batch.attempts
    ek = outer.expected_attempts(batch.a_frames, fer_est,
                                 n_out=cfg.n_out, n_inner=h.n)
    row = _blank_row()
    row.update(
        experiment="reconcile", n=h.n, beta=beta, snr=snr,
        fer=fer_est, frames=batch.attempts, frame_errors=batch.attempts
        - batch.a_frames, residual_ber=ber, outer_converged=int(converged),
        outer_exact=int(exact), key_cost_bits=key_cost,
        expected_attempts=ek["per_batch"],
        expected_attempts_alt=ek["per_blocklength"],
        wall_time_s=time.perf_counter() - t0,
    )
    return [row]


def run_experiment(cfg):
    if cfg.experiment == "crc-penalty":
        return crc_penalty_table(cfg)
    if cfg.experiment == "fer-sweep":
        return fer_sweep(cfg)
    if cfg.experiment == "skr-distance":
        return skr_distance(cfg)
    if cfg.experiment == "threshold":
        return threshold_experiment(cfg)
    if cfg.experiment == "reconcile":
        return reconcile_experiment(cfg)
    raise ConfigError(f"unknown experiment {cfg.experiment!r}")


# ---------------------------------------------------------------------------
# CSV schema

CSV_COLUMNS = (
    "experiment", "n", "beta", "distance_km", "n_crc", "snr", "fer",
    "fer_lo", "fer_hi", "frames", "frame_errors", "timeout", "v_a", "iab",
    "chi_be", "delta_n", "skr", "skr_raw", "below_zero", "dw", "plob",
    "reduction_pct", "snr_threshold", "beta_threshold", "residual_ber",
    "outer_converged", "outer_exact", "key_cost_bits", "expected_attempts",
    "expected_attempts_alt", "wall_time_s",
)

_INT_COLUMNS = {"n", "n_crc", "frames", "frame_errors", "timeout",
                "below_zero", "outer_converged", "outer_exact",
                "key_cost_bits"}


def _blank_row():
    return {k: None for k in CSV_COLUMNS}


def _fmt(key, val):
    if val is None:
        return ""
    if key == "experiment":
        return str(val)
    if key in _INT_COLUMNS:
        return str(int(val))
    return format(float(val), ".9g")


def emit_csv(rows, path):
    """Write rows in the fixed wide schema, floats at 9 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow(_fmt(k, row.get(k)) for k in CSV_COLUMNS)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path):
    """Inverse of :func:`emit_csv`; numeric fields come back as numbers."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(CSV_COLUMNS):
            raise ConfigError(f"{path}: unexpected CSV schema")
        for rec in reader:
            row = {}
            for k in CSV_COLUMNS:
                v = rec[k]
                if v == "":
                    row[k] = None
                elif k == "experiment":
                    row[k] = v
                elif k in _INT_COLUMNS:
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows


def determinism_hash(rows):
    """SHA-256 over the emitted fields, excluding wall-clock timing."""
    h = hashlib.sha256()
    for row in rows:
        for k in CSV_COLUMNS:
            if k == "wall_time_s":
                continue
            h.update(_fmt(k, row.get(k)).encode())
            h.update(b"|")
        h.update(b"\n")
    return h.hexdigest()
