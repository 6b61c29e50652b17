import numpy as np
import pytest

from sbrec import outer


@pytest.fixture(scope="module")
def code():
    # 20k-bit outer code: 20 syndrome bits, single-error-correcting BCH part
    return outer.make_outer_code(20000, 0.999)


@pytest.fixture(scope="module")
def big_code():
    # design point: 100 syndrome bits, t = 5
    return outer.make_outer_code(100000, 0.999)


def test_code_dimensions(code, big_code):
    assert code.n_out == 20000 and code.m_rows == 20
    assert big_code.n_out == 100000 and big_code.m_rows == 100
    assert big_code.t == 5
    assert code.r_out == pytest.approx(0.999)


def test_construction_is_deterministic():
    a = outer.make_outer_code(20000, 0.999)
    b = outer.make_outer_code(20000, 0.999)
    assert a.g_poly == b.g_poly and a.m_gf == b.m_gf


def test_infeasible_outer_code():
    with pytest.raises(outer.OuterError):
        outer.make_outer_code(2000, 0.999)  # 2 syndrome bits: no BCH fits


def test_syndrome_is_linear(code, rng):
    a = rng.integers(0, 2, code.n_out).astype(np.uint8)
    b = rng.integers(0, 2, code.n_out).astype(np.uint8)
    sa, sb, sab = code.syndrome(a), code.syndrome(b), code.syndrome(a ^ b)
    assert np.array_equal(sab, sa ^ sb)
    assert sa.shape == (code.m_rows,)


def test_syndrome_matches_dense_matrix(code, rng):
    dense = code.to_dense()
    assert dense.shape == (code.m_rows, code.n_out)
    for _ in range(5):
        w = rng.integers(0, 2, code.n_out).astype(np.uint8)
        assert np.array_equal(code.syndrome(w), (dense @ w) % 2)


@pytest.mark.parametrize("nerr", [0, 1, 2, 3, 4, 5])
def test_corrects_up_to_design_distance(big_code, nerr, rng):
    w = rng.integers(0, 2, big_code.n_out).astype(np.uint8)
    p = big_code.syndrome(w)
    w_hat = w.copy()
    locs = rng.choice(big_code.n_out, size=nerr, replace=False)
    w_hat[locs] ^= 1
    got, converged = outer.outer_decode_word(big_code, w_hat, p)
    assert converged and np.array_equal(got, w)


def test_detects_beyond_design_distance(big_code, rng):
    w = rng.integers(0, 2, big_code.n_out).astype(np.uint8)
    p = big_code.syndrome(w)
    w_hat = w.copy()
    w_hat[rng.choice(big_code.n_out, size=6, replace=False)] ^= 1
    got, converged = outer.outer_decode_word(big_code, w_hat, p)
    assert not converged or np.array_equal(got, w)


def test_monte_carlo_low_ber_recovery(big_code):
    # injected residual BER 1e-5 over 100 batches: high recovery, never a
    # silently wrong result
    rng = np.random.default_rng(31)
    ok = 0
    for _ in range(100):
        w = rng.integers(0, 2, big_code.n_out).astype(np.uint8)
        flips = rng.random(big_code.n_out) < 1e-5
        w_hat = w ^ flips.astype(np.uint8)
        got, converged = outer.outer_decode_word(big_code, w_hat,
                                                 big_code.syndrome(w))
        if converged:
            assert np.array_equal(got, w)
            ok += 1
    assert ok >= 95


def _frames(rng, n_frames, k, accept_mask, flip_in=()):
    for i in range(n_frames):
        s = rng.integers(0, 2, k).astype(np.uint8)
        s_hat = s.copy()
        if i in flip_in:
            s_hat[0] ^= 1
        yield outer.ReconciliationFrame(index=i, accepted=bool(accept_mask[i]),
                                        s=s, s_hat=s_hat)


def test_accumulate_keeps_only_accepted(rng):
    k = 40
    mask = [True, False, True, True]
    batch = outer.accumulate(_frames(rng, 4, k, mask), n_out=120, k_inner=k)
    assert batch.complete and batch.a_frames == 3
    assert batch.attempts == 4
    assert np.array_equal(batch.idx, [0, 2, 3])
    assert batch.w.size == 120


def test_exchange_decode_and_stats(code, rng):
    k = 40
    a = code.n_out // k
    mask = [True] * (a + 10)
    batch = outer.accumulate(_frames(rng, a + 10, k, mask, flip_in={3}),
                             n_out=code.n_out, k_inner=k)
    # frames past completion are not consumed
    assert batch.attempts == a
    p, key_cost = outer.outer_syndrome_exchange(batch, code)
    assert key_cost == code.m_rows
    assert outer.residual_ber(batch.w, batch.w_hat) == pytest.approx(
        1.0 / code.n_out)
    _, converged = outer.outer_decode(batch, code, p)
    assert converged
    assert np.array_equal(batch.w_hat_corrected, batch.w)
    assert not outer.undetected_error(batch, batch.w)


def test_expected_attempts_formulas():
    got = outer.expected_attempts(100, 0.5, n_out=100000, n_inner=1000)
    assert got["per_batch"] == pytest.approx(200.0)
    assert got["per_blocklength"] == pytest.approx(200.0)
    with pytest.raises(outer.OuterError):
        outer.expected_attempts(10, 1.0)


def test_expected_attempts_monte_carlo(rng):
    # attempts per batch = sum of A geometric waits with success prob 1 - FER
    fer, a_frames, n_batches = 0.5, 100, 10000
    waits = rng.geometric(1.0 - fer, size=(n_batches, a_frames))
    mean_attempts = waits.sum(axis=1).mean()
    assert mean_attempts == pytest.approx(
        outer.expected_attempts(a_frames, fer)["per_batch"], rel=0.02)


def test_batch_save_load_roundtrip(code, rng, tmp_path):
    k = 40
    batch = outer.accumulate(_frames(rng, code.n_out // k, k,
                                     [True] * (code.n_out // k)),
                             n_out=code.n_out, k_inner=k)
    p, _ = outer.outer_syndrome_exchange(batch, code)
    path = tmp_path / "batch.npz"
    outer.save_batch(path, batch)
    back = outer.load_batch(path)
    assert np.array_equal(back.w, batch.w)
    assert np.array_equal(back.w_hat, batch.w_hat)
    assert np.array_equal(back.idx, batch.idx)
