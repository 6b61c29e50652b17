"""Outer layer of the two-step reconciliation protocol.

Short inner frames are screened by their syndrome check; the information
payloads of accepted frames are concatenated into a long word, and a
high-rate outer code removes the residual bit errors in one shot.  The outer
syndrome is the only extra classical message, sent under one-time-pad
encryption, so its length is exactly the secret-key cost of the second step.

The outer code is a shortened binary BCH code decoded with hard decisions
(Berlekamp-Massey plus Chien search).  At the default operating point
(n_out = 10^5, r_out = 0.999) the 100-bit budget buys 5 guaranteed
corrections plus 15 spare parity bits used for miscorrection detection,
which is what the residual bit error rates well below 10^-4 call for.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


class OuterError(ValueError):
    """Invalid outer-code parameters or incomplete batch."""


# ---------------------------------------------------------------------------
# GF(2^m) arithmetic via log/antilog tables

_PRIM_POLY = {
    2: 0b111, 3: 0b1011, 4: 0b10011, 5: 0b100101, 6: 0b1000011,
    7: 0b10001001, 8: 0b100011101, 9: 0b1000010001, 10: 0b10000001001,
    11: 0b100000000101, 12: 0b1000001010011, 13: 0b10000000011011,
    14: 0b100010001000011, 15: 0b1000000000000011, 16: 0b10001000000001011,
    17: 0b100000000000001001, 18: 0b1000000000010000001,
}


@lru_cache(maxsize=8)
def _field(m):
    """(alog, log) tables for GF(2^m); alog[i] = alpha^i, length 2^m - 1."""
    if m not in _PRIM_POLY:
        raise OuterError(f"no primitive polynomial tabulated for m={m}")
    poly = _PRIM_POLY[m]
    q = (1 << m) - 1
    alog = np.empty(q, dtype=np.int64)
    log = np.empty(q + 1, dtype=np.int64)
    x = 1
    for i in range(q):
        alog[i] = x
        log[x] = i
        x <<= 1
        if x >> m:
            x ^= poly
    log[0] = -1
    return alog, log


def _gf_mul(m, a, b):
    if a == 0 or b == 0:
        return 0
    alog, log = _field(m)
    q = (1 << m) - 1
    return int(alog[(log[a] + log[b]) % q])


def _gf_inv(m, a):
    alog, log = _field(m)
    q = (1 << m) - 1
    return int(alog[(q - log[a]) % q])


def _min_poly(m, exp):
    """Minimal polynomial over GF(2) of alpha^exp, as a GF(2) int."""
    q = (1 << m) - 1
    coset, e = [], exp % q
    while e not in coset:
        coset.append(e)
        e = (2 * e) % q
    alog, _ = _field(m)
    # product of (x - alpha^c) with field-valued coefficients
    poly = [1]
    for c in coset:
        root = int(alog[c])
        nxt = [0] * (len(poly) + 1)
        for i, co in enumerate(poly):
            nxt[i] ^= _gf_mul(m, co, root)
            nxt[i + 1] ^= co
        poly = nxt
    out = 0
    for i, co in enumerate(poly):
        if co not in (0, 1):
            raise OuterError("minimal polynomial has non-binary coefficient")
        out |= co << i
    return out


def _poly_mul2(a, b):
    """Carry-less product of GF(2)[x] polynomials held in ints."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _poly_mod2(a, g):
    dg = g.bit_length() - 1
    da = a.bit_length() - 1
    while da >= dg:
        a ^= g << (da - dg)
        da = a.bit_length() - 1
    return a


# ---------------------------------------------------------------------------
# the outer code proper


@dataclass
class OuterCode:
    """Shortened BCH code with hard-decision syndrome decoding.

    ``m_rows`` is the transmitted syndrome length in bits (the key cost per
    batch); the first ``g_deg`` of them are the BCH remainder, the rest are
    stride-interleaved parities kept for miscorrection detection.
    """

    n_out: int
    m_rows: int
    r_out: float
    t: int
    m_gf: int
    g_poly: int
    g_deg: int
    _remainder_rows: np.ndarray  # (n_out, words) packed x^(g_deg+i) mod g

    def syndrome(self, word):
        """Full m_rows-bit syndrome of a length-n_out word."""
        word = np.asarray(word, dtype=np.uint8)
        if word.size != self.n_out:
            raise OuterError("word length != n_out")
        rho = self._remainder(word)
        bits = np.zeros(self.m_rows, dtype=np.uint8)
        for i in range(self.g_deg):
            bits[i] = (rho >> i) & 1
        extra = self.m_rows - self.g_deg
        if extra > 0:
            for l in range(extra):
                bits[self.g_deg + l] = np.bitwise_xor.reduce(word[l::extra])
        return bits

    def _remainder(self, word):
        """x^g_deg * word(x) mod g(x), as a GF(2) int."""
        sel = self._remainder_rows[word != 0]
        if sel.shape[0] == 0:
            return 0
        acc = np.bitwise_xor.reduce(sel, axis=0)
        out = 0
        for w, v in enumerate(acc):
            out ^= int(v) << (64 * w)
        return out

    def to_dense(self):
        """Dense {0,1} parity matrix (m_rows x n_out), rows match syndrome()."""
        h = np.zeros((self.m_rows, self.n_out), dtype=np.uint8)
        for j in range(self.n_out):
            r = 0
            for w, v in enumerate(self._remainder_rows[j]):
                r ^= int(v) << (64 * w)
            for i in range(self.g_deg):
                h[i, j] = (r >> i) & 1
        extra = self.m_rows - self.g_deg
        for l in range(extra):
            h[self.g_deg + l, l::extra] = 1
        return h


def make_outer_code(n_out, r_out=0.999):
    """Deterministic outer code with syndrome length (1 - r_out) n_out.

    The BCH design distance is the largest that fits the syndrome budget;
    construction fails if even one correction does not fit.
    """
    m_rows = round((1.0 - r_out) * n_out)
    if not 0 < m_rows < n_out:
        raise OuterError(f"syndrome budget {m_rows} infeasible for n_out={n_out}")
    m_gf = 2
    while (1 << m_gf) - 1 < n_out + m_rows:
        m_gf += 1
    if m_gf not in _PRIM_POLY:
        raise OuterError(f"n_out={n_out} too large (needs GF(2^{m_gf}))")
    g, t = 1, 0
    while True:
        mp = _min_poly(m_gf, 2 * t + 1)
        # lcm step: factors are irreducible, so skip ones already present
        cand = g if g != 1 and _poly_mod2(g, mp) == 0 else _poly_mul2(g, mp)
        if cand.bit_length() - 1 > m_rows:
            break
        g, t = cand, t + 1
    if t == 0:
        raise OuterError(
            f"budget of {m_rows} bits cannot correct errors at n_out={n_out}")
    g_deg = g.bit_length() - 1

    # remainder table: row i holds x^(g_deg+i) mod g, bit-packed
    words = -(-g_deg // 64)
    rows = np.empty((n_out, words), dtype=np.uint64)
    mask = (1 << 64) - 1
    r = _poly_mod2(1 << g_deg, g)
    for i in range(n_out):
        v = r
        for w in range(words):
            rows[i, w] = v & mask
            v >>= 64
        r <<= 1
        if r >> g_deg:
            r ^= g
    return OuterCode(n_out=n_out, m_rows=m_rows, r_out=1.0 - m_rows / n_out,
                     t=t, m_gf=m_gf, g_poly=g, g_deg=g_deg,
                     _remainder_rows=rows)


def _berlekamp_massey(m, syndromes):
    """Error-locator polynomial (list of field coefficients, sigma[0]=1)."""
    c, b = [1], [1]
    l, shift = 0, 1
    bden = 1
    for n, s in enumerate(syndromes):
        d = s
        for i in range(1, l + 1):
            d ^= _gf_mul(m, c[i], syndromes[n - i])
        if d == 0:
            shift += 1
            continue
        coef = _gf_mul(m, d, _gf_inv(m, bden))
        nxt = c + [0] * max(0, len(b) + shift - len(c))
        for i, bc in enumerate(b):
            nxt[i + shift] ^= _gf_mul(m, coef, bc)
        if 2 * l <= n:
            b, bden, l, shift = c, d, n + 1 - l, 1
        else:
            shift += 1
        c = nxt
    return c[: l + 1]


def _chien_search(code, sigma):
    """Data-bit indices whose locators are roots of sigma, vectorized."""
    alog, log = _field(code.m_gf)
    q = (1 << code.m_gf) - 1
    idx = np.arange(code.n_out, dtype=np.int64)
    # error at data bit i has locator X = alpha^(g_deg + i); sigma's roots
    # are the inverses X^-1 = alpha^(-(g_deg+i))
    e = (-(code.g_deg + idx)) % q
    acc = np.full(code.n_out, sigma[0], dtype=np.int64)
    for lpow, co in enumerate(sigma[1:], start=1):
        if co == 0:
            continue
        expo = (log[co] + lpow * e) % q
        acc ^= alog[expo]
    return idx[acc == 0]


def outer_decode_word(code, w_hat, p):
    """Correct ``w_hat`` towards syndrome ``p``; returns (word, converged).

    Decoding is bounded-distance: up to ``code.t`` bit errors are located
    algebraically; the spare parity bits then veto miscorrections.  A
    non-converged result is meant to be discarded by the caller.
    """
    p = np.asarray(p, dtype=np.uint8)
    if p.size != code.m_rows:
        raise OuterError("syndrome length mismatch")
    word = np.asarray(w_hat, dtype=np.uint8).copy()

    def full_match(w):
        return np.array_equal(code.syndrome(w), p)

    rho_target = 0
    for i in range(code.g_deg):
        rho_target ^= int(p[i]) << i
    rho_e = code._remainder(word) ^ rho_target
    if rho_e == 0:
        return (word, True) if full_match(word) else (word, False)

    alog, log = _field(code.m_gf)
    q = (1 << code.m_gf) - 1
    syndromes = []
    for j in range(1, 2 * code.t + 1):
        s, v = 0, rho_e
        # evaluate rho_e at alpha^j by summing alpha^(j*i) over set bits
        i = 0
        while v:
            if v & 1:
                s ^= int(alog[(j * i) % q])
            v >>= 1
            i += 1
        syndromes.append(s)
    sigma = _berlekamp_massey(code.m_gf, syndromes)
    nu = len(sigma) - 1
    if nu == 0 or nu > code.t:
        return word, False
    locs = _chien_search(code, sigma)
    if locs.size != nu:
        return word, False  # locator roots outside the shortened range
    word[locs] ^= 1
    return (word, True) if full_match(word) else (word, False)


# ---------------------------------------------------------------------------
# batch assembly


@dataclass
class ReconciliationFrame:
    """Outcome of one inner reconciliation attempt.

    ``s`` is the near-side information payload, ``s_hat`` the far-side
    estimate; ``accepted`` reflects the inner syndrome screen.
    """

    index: int
    accepted: bool
    s: np.ndarray | None = None
    s_hat: np.ndarray | None = None


@dataclass
class OuterBatch:
    n_out: int
    k_inner: int
    a_frames: int
    idx: list[int] = field(default_factory=list)
    w: np.ndarray | None = None
    w_hat: np.ndarray | None = None
    p: np.ndarray | None = None
    w_hat_corrected: np.ndarray | None = None
    attempts: int = 0

    @property
    def complete(self):
        return len(self.idx) == self.a_frames


def accumulate(frames, n_out, k_inner, batch=None):
    """Fold a stream of inner-frame outcomes into an outer batch.

    Accepted frames contribute their ``k_inner`` payload bits to both the
    local word ``w`` and the far-side word ``w_hat``; rejected frames only
    increment the attempt counter.  Stops consuming once A = n_out/k_inner
    frames have been collected, so the same stream can feed several batches.
    """
    if n_out % k_inner != 0:
        raise OuterError(f"n_out={n_out} not a multiple of k_inner={k_inner}")
    if batch is None:
        batch = OuterBatch(n_out=n_out, k_inner=k_inner,
                           a_frames=n_out // k_inner)
        batch.w = np.zeros(n_out, dtype=np.uint8)
        batch.w_hat = np.zeros(n_out, dtype=np.uint8)
    for fr in frames:
        if batch.complete:
            break
        batch.attempts += 1
        if not fr.accepted:
            continue
        if fr.s is None or fr.s_hat is None:
            raise OuterError(f"accepted frame {fr.index} carries no payload")
        if len(fr.s) != k_inner or len(fr.s_hat) != k_inner:
            raise OuterError(f"frame {fr.index} payload length != k_inner")
        off = len(batch.idx) * k_inner
        batch.w[off: off + k_inner] = np.asarray(fr.s, dtype=np.uint8)
        batch.w_hat[off: off + k_inner] = np.asarray(fr.s_hat, dtype=np.uint8)
        batch.idx.append(fr.index)
    return batch


def outer_syndrome_exchange(batch, code):
    """Syndrome of the completed batch plus the key cost of sending it.

    Returns (p, key_cost): the syndrome is one-time-padded on the wire, so
    key_cost equals its length, (1 - r_out) n_out bits.
    """
    if not batch.complete:
        raise OuterError(
            f"batch incomplete: {len(batch.idx)}/{batch.a_frames} frames")
    if code.n_out != batch.n_out:
        raise OuterError("outer code length != batch length")
    p = code.syndrome(batch.w)
    batch.p = p
    return p, int(p.size)


def outer_decode(batch, code, p):
    """Correct the far-side word of a batch towards syndrome ``p``."""
    word, converged = outer_decode_word(code, batch.w_hat, p)
    if converged:
        batch.w_hat_corrected = word
    return word, converged


def residual_ber(w, w_hat):
    """Fraction of differing bits between two equal-length words."""
    w = np.asarray(w, dtype=np.uint8)
    w_hat = np.asarray(w_hat, dtype=np.uint8)
    if w.size != w_hat.size or w.size == 0:
        raise OuterError("words must be non-empty and of equal length")
    return float(np.count_nonzero(w ^ w_hat)) / w.size


def undetected_error(batch, w_truth):
    """True when the corrected word satisfies the syndrome but is wrong."""
    if batch.w_hat_corrected is None:
        return False
    return not np.array_equal(batch.w_hat_corrected,
                              np.asarray(w_truth, dtype=np.uint8))


def expected_attempts(a_frames, fer, n_out=None, n_inner=None):
    """Mean reconciliation attempts per batch, E[K] = A / (1 - FER).

    The alternative normalization N_out / (N (1 - FER)) is also reported
    (key ``per_blocklength``) for comparison; the two differ by the factor
    k/N = R whenever both are given.
    """
    if not 0.0 <= fer < 1.0:
        raise OuterError("FER must be in [0, 1)")
    out = {"per_batch": a_frames / (1.0 - fer)}
    if n_out is not None and n_inner is not None:
        out["per_blocklength"] = n_out / (n_inner * (1.0 - fer))
    return out


def save_batch(path, batch):
    """Replay record of a batch: indices, both words, syndrome."""
    np.savez(
        path,
        idx=np.asarray(batch.idx, dtype=np.int64),
        w=batch.w,
        w_hat=batch.w_hat,
        p=batch.p if batch.p is not None else np.zeros(0, dtype=np.uint8),
        meta=np.array([batch.n_out, batch.k_inner, batch.attempts],
                      dtype=np.int64),
    )


def load_batch(path):
    d = np.load(path)
    n_out, k_inner, attempts = (int(v) for v in d["meta"])
    batch = OuterBatch(n_out=n_out, k_inner=k_inner,
                       a_frames=n_out // k_inner,
                       idx=list(d["idx"]), w=d["w"].astype(np.uint8),
                       w_hat=d["w_hat"].astype(np.uint8), attempts=attempts)
    if d["p"].size:
        batch.p = d["p"].astype(np.uint8)
    return batch
