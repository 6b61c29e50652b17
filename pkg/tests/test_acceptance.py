"""End-to-end acceptance checks.

The Monte-Carlo FER points are computed once per session (master seed 1,
stop rule: 100 frame errors per point) and shared across the criteria that
consume them.  Two checks encode targets the shipped code family does not
reach and are expected to fail; see the project notes for the analysis:
``test_inner_threshold_band`` and ``test_distance_gain_beta_100_vs_95``.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from sbrec import channel, de, harness, ldpc, multidim, outer, security

MASTER_SEED = 1
FER_GRIDS = {
    1000: (0.70, 0.80, 0.90, 0.95, 0.99),
    10000: (0.70, 0.80, 0.90),
    100000: (0.50, 0.60, 0.70, 0.99),
}


@pytest.fixture(scope="session")
def fer_tables():
    """Measured FER vs beta for each blocklength; the expensive part."""
    tables = {}
    for n, grid in FER_GRIDS.items():
        cfg = harness.make_config(
            blocklength=n, beta_grid=grid, master_seed=MASTER_SEED,
            max_iters=500, min_frame_errors=100, max_frames=5000)
        tables[n] = harness.fer_sweep(cfg)
    return tables


def _fer(tables, n, beta):
    for row in tables[n]:
        if row["beta"] == beta:
            return row["fer"]
    raise KeyError((n, beta))


# --- 1: CRC penalty table is exact and analytic ---------------------------

def test_crc_penalty_exact():
    cfg = harness.make_config(experiment="crc-penalty")
    rows = harness.crc_penalty_table(cfg)
    rate = 1.0 / 50.0
    assert len(rows) == 6 * 32
    for row in rows:
        expect = 100.0 * min(1.0, row["n_crc"] / (rate * row["n"]))
        assert abs(row["reduction_pct"] - expect) < 1e-9
    spot = [r for r in rows if r["n"] == 1000 and r["n_crc"] == 1][0]
    assert abs(spot["reduction_pct"] - 5.0) < 1e-9


# --- 2: outer-code efficiency penalty is negligible -----------------------

def test_outer_penalty_negligible():
    i_ab = 0.0202
    b_ideal = security.beta_outer(0.02, 1.0, i_ab)
    b_outer = security.beta_outer(0.02, 0.999, i_ab)
    assert abs(b_outer - b_ideal) / b_ideal <= 0.001 + 1e-12


# --- 3: codec soundness ---------------------------------------------------

def test_encode_syndrome_soundness(small_inner_code, rng):
    h = small_inner_code
    for _ in range(10000):
        c = ldpc.encode(h, rng.integers(0, 2, h.k).astype(np.uint8))
        assert not ldpc.syndrome(h, c).any()


def test_bp_matches_ml(toy_code):
    h = toy_code
    gen = np.array([ldpc.encode(h, r) for r in np.eye(h.k, dtype=np.uint8)])
    msgs = ((np.arange(2**h.k)[:, None] >> np.arange(h.k)) & 1).astype(np.uint8)
    codebook = (msgs @ gen) % 2
    bpsk = 1.0 - 2.0 * codebook
    rng = np.random.default_rng(77)
    sigma = 1.0
    agree = 0
    for _ in range(1000):
        c = codebook[rng.integers(len(codebook))]
        llr = 2.0 * ((1.0 - 2.0 * c) + rng.normal(0, sigma, h.n)) / sigma**2
        c_bp, _, _ = ldpc.decode_bp(h, llr, 100)
        if np.array_equal(c_bp, codebook[np.argmax(bpsk @ llr)]):
            agree += 1
    assert agree >= 990


# --- 4: multidimensional mapping ------------------------------------------

@pytest.mark.parametrize("d", multidim.DIMS)
def test_mapping_roundtrip_and_norms(d):
    rng = np.random.default_rng(500 + d)
    nblocks = 10000
    u = 1.0 - 2.0 * rng.integers(0, 2, nblocks * d)
    y = rng.normal(size=nblocks * d)
    m = multidim.map_message(u, y, d)
    r = multidim.demap(m, y, d)  # noiseless: x = y
    assert np.max(np.abs(r.values - u)) < 1e-9
    a = rng.normal(size=(nblocks, d))
    b = rng.normal(size=(nblocks, d))
    ab = multidim.cd_multiply(a, b)
    np.testing.assert_allclose(
        np.linalg.norm(ab, axis=1),
        np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1), rtol=1e-9)


# --- 5: FER-vs-beta shape over blocklengths -------------------------------

def _max_slope(rows):
    slopes = []
    for a, b in zip(rows, rows[1:]):
        db = b["beta"] - a["beta"]
        if db <= 0.12:  # keep spacing comparable across blocklengths
            slopes.append((b["fer"] - a["fer"]) / db)
    return max(slopes)


def test_fer_monotone_in_beta(fer_tables):
    for n, rows in fer_tables.items():
        fers = [r["fer"] for r in rows]
        assert fers == sorted(fers), (n, fers)


def test_fer_slope_steepens_with_blocklength(fer_tables):
    slopes = [_max_slope(fer_tables[n]) for n in (1000, 10000, 100000)]
    assert slopes[0] < slopes[1] < slopes[2], slopes


def test_fer_crossing_beyond_threshold(fer_tables):
    assert _fer(fer_tables, 1000, 0.99) < _fer(fer_tables, 100000, 0.99)


def test_short_code_fer_at_high_beta(fer_tables):
    assert _fer(fer_tables, 1000, 0.99) <= 0.87


def test_fer_stop_rule_honored(fer_tables):
    for rows in fer_tables.values():
        for row in rows:
            assert row["frame_errors"] >= 100 or row["frames"] == 5000


# --- 6: density-evolution thresholds --------------------------------------

def test_inner_threshold_band():
    # EXPECTED RED: best base matrix found in an extensive search reaches
    # beta* = 0.9258 under this engine; the band below is kept as the
    # honest open target rather than widened.
    res = de.de_threshold(ldpc.default_inner_protograph(), tol=1e-4)
    assert 0.975 <= res.beta_threshold <= 0.995, res.beta_threshold


def test_regular_3_6_threshold_anchor():
    res = de.de_threshold(ldpc.load_shipped_protograph("r3_6"), tol=1e-5)
    ebn0_db = 10.0 * math.log10(res.snr_threshold / (2.0 * 0.5))
    assert abs(ebn0_db - 1.163) <= 0.05


# --- 7: outer stage end-to-end --------------------------------------------

def test_outer_recovery_at_target_ber():
    code = outer.make_outer_code(100000, 0.999)
    rng = np.random.default_rng(2024)
    exact = wrong = 0
    for _ in range(1000):
        w = rng.integers(0, 2, code.n_out).astype(np.uint8)
        w_hat = w ^ (rng.random(code.n_out) < 1e-5).astype(np.uint8)
        got, converged = outer.outer_decode_word(code, w_hat, code.syndrome(w))
        if converged:
            if np.array_equal(got, w):
                exact += 1
            else:
                wrong += 1
    assert exact >= 990
    assert wrong == 0


def test_outer_key_cost_is_100_bits(rng):
    code = outer.make_outer_code(100000, 0.999)
    k = 1000
    frames = (outer.ReconciliationFrame(
        index=i, accepted=True,
        s=(s := rng.integers(0, 2, k).astype(np.uint8)), s_hat=s)
        for i in range(100))
    batch = outer.accumulate(frames, 100000, k)
    _, key_cost = outer.outer_syndrome_exchange(batch, code)
    assert key_cost == 100


# --- 8: attempt statistics ------------------------------------------------

def test_expected_attempts_monte_carlo():
    fer, a_frames = 0.5, 100
    rng = np.random.default_rng(8)
    waits = rng.geometric(1.0 - fer, size=(10000, a_frames)).sum(axis=1)
    stats = outer.expected_attempts(a_frames, fer, n_out=100000, n_inner=1000)
    assert waits.mean() == pytest.approx(stats["per_batch"], rel=0.02)
    # the per-blocklength normalization differs by the code rate; reported
    # for comparison, not asserted
    print(f"E[K] per batch {stats['per_batch']:.1f}, "
          f"per blocklength {stats['per_blocklength']:.1f}")


# --- 9: secret-key-rate consequences --------------------------------------

def test_skr_ratio_and_bound_consistency(fer_tables):
    fer_short = _fer(fer_tables, 1000, 0.99)
    fer_long = _fer(fer_tables, 100000, 0.99)
    cfg = harness.make_config(
        experiment="skr-distance", operating_beta=0.99,
        distance_grid=(10.0, 40.0, 70.0, 100.0, 130.0, 140.0, 160.0))
    rows_short = harness.skr_distance(replace(cfg, fer_override=fer_short))
    rows_long = harness.skr_distance(replace(cfg, fer_override=fer_long))
    for row in rows_short + rows_long:
        assert row["skr"] <= row["plob"] + 1e-12
        assert row["dw"] <= row["plob"] + 1e-12
        assert row["skr"] <= row["dw"] + 1e-12
    at140 = {r["distance_km"]: r for r in rows_short}[140.0]["skr"]
    at140_long = {r["distance_km"]: r for r in rows_long}[140.0]["skr"]
    # short-code SKR must beat the long code by at least 2x at 140 km
    assert at140 > 0.0
    assert at140 >= 2.0 * at140_long


def _distance_to_zero(beta):
    delta_n = security.finite_size_penalty(1e10)

    def raw(dist):
        p0 = channel.SystemParams(distance_km=dist)
        try:
            v_a = channel.solve_va(p0, 0.02 / beta)
        except channel.ChannelError:
            return -1.0
        chi = security.holevo_bound(replace(p0, v_a=v_a))
        return 0.02 - chi - delta_n  # beta * i_ab = R identically

    lo, hi = 1.0, 400.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if raw(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_distance_gain_beta_100_vs_95():
    # EXPECTED RED: under the trusted entangling-cloner model with the
    # default system parameters the gain is ~24 %, not the >= 30 % target
    # (the FER factor scales both curves equally and cancels here).
    gain = _distance_to_zero(1.00) / _distance_to_zero(0.95)
    assert gain >= 1.30, gain


# --- 10: determinism ------------------------------------------------------

def test_determinism_hash_stable_across_runs():
    base = dict(blocklength=1000, beta_grid=(0.7,), master_seed=MASTER_SEED,
                min_frame_errors=5, max_frames=40)
    h1 = harness.determinism_hash(harness.fer_sweep(harness.make_config(**base)))
    h2 = harness.determinism_hash(harness.fer_sweep(harness.make_config(**base)))
    assert h1 == h2
    skr = dict(experiment="skr-distance", fer_override=0.5,
               distance_grid=(10.0, 50.0))
    s1 = harness.determinism_hash(harness.skr_distance(harness.make_config(**skr)))
    s2 = harness.determinism_hash(harness.skr_distance(harness.make_config(**skr)))
    assert s1 == s2


def test_seed_changes_output():
    base = dict(blocklength=1000, beta_grid=(0.7,), min_frame_errors=5,
                max_frames=40)
    h1 = harness.determinism_hash(
        harness.fer_sweep(harness.make_config(master_seed=1, **base)))
    h2 = harness.determinism_hash(
        harness.fer_sweep(harness.make_config(master_seed=2, **base)))
    assert h1 != h2
