import math

import pytest

from sbrec import de, ldpc
from sbrec.channel import mutual_information


def test_regular_3_6_threshold_matches_published_value():
    # Gaussian-approximation threshold of the (3,6) ensemble: published
    # Eb/N0* = 1.163 dB (exact density evolution gives 1.110 dB)
    proto = ldpc.load_shipped_protograph("r3_6")
    res = de.de_threshold(proto, tol=1e-5)
    ebn0_db = 10.0 * math.log10(res.snr_threshold / (2.0 * 0.5))
    assert ebn0_db == pytest.approx(1.163, abs=0.05)
    assert res.converged


def test_shipped_low_rate_threshold_frozen_regression():
    proto = ldpc.default_inner_protograph()
    res = de.de_threshold(proto, tol=1e-4)
    # frozen reference values for the shipped rate-1/50 base matrix
    assert res.snr_threshold == pytest.approx(0.030405, abs=3e-4)
    assert res.beta_threshold == pytest.approx(0.9258, abs=2e-3)


def test_threshold_consistency_beta_vs_snr():
    proto = ldpc.default_inner_protograph()
    res = de.de_threshold(proto, tol=1e-4)
    beta = proto.design_rate / mutual_information(res.snr_threshold)
    assert res.beta_threshold == pytest.approx(beta, rel=1e-9)


def test_de_run_bracket_behaviour():
    proto = ldpc.load_shipped_protograph("r3_6")
    res = de.de_threshold(proto, tol=1e-4)
    ok_hi, _ = de.de_run(proto, res.snr_threshold * 1.05)
    ok_lo, _ = de.de_run(proto, res.snr_threshold * 0.95)
    assert ok_hi and not ok_lo


def test_de_run_iterations_positive():
    proto = ldpc.load_shipped_protograph("r3_6")
    ok, iters = de.de_run(proto, 1.5)
    assert ok and iters >= 1
