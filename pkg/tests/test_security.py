import math

import numpy as np
import pytest

from sbrec import security
from sbrec.channel import SystemParams, link_budget, mutual_information


def test_beta_crc_formula():
    # (R N - n_crc) / (N I_AB)
    assert security.beta_crc(0.02, 1000, 1, 0.02) == pytest.approx(
        (0.02 * 1000 - 1) / (1000 * 0.02))


def test_beta_crc_infeasible():
    with pytest.raises(security.SecurityError):
        security.beta_crc(0.02, 1000, 20, 0.02)


def test_crc_beta_reduction_spot():
    # one revealed bit out of 20 info bits costs 5 %
    assert security.crc_beta_reduction(0.02, 1000, 1) == pytest.approx(0.05)
    assert security.crc_beta_reduction(0.02, 1000, 1000) == 1.0


def test_beta_outer_penalty_is_relative_rate_loss():
    b1 = security.beta_outer(0.02, 1.0, 0.021)
    b2 = security.beta_outer(0.02, 0.999, 0.021)
    assert b2 / b1 == pytest.approx(0.999, rel=1e-12)


def test_covariance_matrix_structure():
    p = SystemParams(distance_km=20.0, v_a=4.0)
    g = security.covariance_matrix(p)
    assert g.shape == (4, 4)
    assert np.array_equal(g, g.T)
    v = 5.0
    assert g[0, 0] == pytest.approx(v)
    assert g[0, 2] > 0 and g[1, 3] == -g[0, 2]
    # positive definiteness of the physical state
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_symplectic_spectrum_matches_dense_oracle():
    # closed-form eigenvalues of the shared state vs a dense eigen-solver
    import math
    p = SystemParams(distance_km=50.0, v_a=4.0)
    g = security.covariance_matrix(p)
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    dense = np.sort(np.abs(np.linalg.eigvals(1j * omega @ g)).real)[::2][::-1]
    v = p.v_a + 1.0
    t = p.transmittance
    chi_line = (1.0 - t) / t + p.xi_bob
    a = v * v * (1 - 2 * t) + 2 * t + t * t * (v + chi_line) ** 2
    b = t * t * (v * chi_line + 1.0) ** 2
    l1 = math.sqrt((a + math.sqrt(a * a - 4 * b)) / 2)
    l2 = math.sqrt((a - math.sqrt(a * a - 4 * b)) / 2)
    assert l1 == pytest.approx(dense[0], abs=1e-9)
    assert l2 == pytest.approx(dense[1], abs=1e-9)


def test_holevo_zero_in_lossless_noiseless_limit():
    p = SystemParams(eta=1.0, xi_bob=0.0, nu_el=0.0, alpha_db_km=0.0,
                     distance_km=0.0, v_a=4.0)
    assert security.holevo_bound(p) == pytest.approx(0.0, abs=1e-9)


def test_holevo_monotone_in_distance_and_noise():
    # at a fixed target I_AB (modulation re-optimized per distance), the
    # channel must be driven harder the further Bob is, handing Eve more
    from sbrec.channel import solve_va
    from dataclasses import replace
    chis = []
    for d in (10, 50, 100, 150):
        p = SystemParams(distance_km=d)
        chis.append(security.holevo_bound(replace(p, v_a=solve_va(p, 0.02))))
    assert all(b > a for a, b in zip(chis, chis[1:]))
    chis = [security.holevo_bound(SystemParams(distance_km=50, xi_bob=x,
                                               v_a=4.0))
            for x in (0.0, 0.005, 0.02)]
    assert all(b > a for a, b in zip(chis, chis[1:]))


def test_untrusted_model_is_more_pessimistic():
    p = SystemParams(distance_km=50.0, v_a=4.0)
    assert security.holevo_bound(p, trusted=False) > security.holevo_bound(p)


def test_devetak_winter_below_plob():
    for d in (10, 50, 100, 160):
        p = SystemParams(distance_km=d, v_a=4.0)
        dw = security.devetak_winter_at(p)
        assert 0.0 <= dw <= security.plob_bound(p.transmittance)


def test_finite_size_penalty_hand_value():
    n = 1e10
    expect = 7 * math.sqrt(math.log2(2 / 1e-10) / n) + (2 / n) * math.log2(1 / 1e-10)
    assert security.finite_size_penalty(n) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(security.SecurityError):
        security.finite_size_penalty(100)


def test_secret_key_rate_arithmetic_and_clamp():
    r = security.secret_key_rate(0.5, 0.9, 0.02, 0.005, 0.001)
    assert r.raw == pytest.approx(0.5 * (0.9 * 0.02 - 0.005 - 0.001))
    assert r.skr == r.raw and not r.below_zero
    neg = security.secret_key_rate(0.0, 0.5, 0.02, 0.05, 0.0)
    assert neg.skr == 0.0 and neg.below_zero and neg.raw < 0
    with pytest.raises(security.SecurityError):
        security.secret_key_rate(1.5, 0.9, 0.02, 0.0, 0.0)


def test_plob_bound_value():
    assert security.plob_bound(0.5) == pytest.approx(1.0)
    with pytest.raises(security.SecurityError):
        security.plob_bound(1.0)
