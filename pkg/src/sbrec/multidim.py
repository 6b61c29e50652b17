"""Multidimensional reconciliation: mapping, demapping, LLR formation.

Bob turns his BPSK codeword u and measured quadratures y into a classical
message m, per block of d values, by dividing in the real/complex/quaternion/
octonion algebra (d = 1, 2, 4, 8).  Alice multiplies m back with her own
quadratures x to obtain a virtual BPSK-plus-noise observation r.

Products are evaluated strictly as written (the octonions are not
associative); the multiplication follows the standard Cayley-Dickson
doubling, implemented recursively and vectorized over blocks.
"""

from dataclasses import dataclass

import numpy as np

DIMS = (1, 2, 4, 8)

LLR_MAX = 38.0


class MultidimError(ValueError):
    """Bad dimension, shape, or a degenerate (zero-norm) block."""


def _check_dim(d):
    if d not in DIMS:
        raise MultidimError(f"dimension must be one of {DIMS}, got {d}")


def _blocks(v, d, name):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size % d != 0 or v.size == 0:
        raise MultidimError(f"{name} length {v.size} not a positive multiple of {d}")
    return v.reshape(-1, d)


def cd_multiply(a, b):
    """Cayley-Dickson product, vectorized over the leading axes.

    ``a`` and ``b`` have shape (..., d); the last axis is the algebra
    coordinate (scalar part first).
    """
    d = a.shape[-1]
    if d == 1:
        return a * b
    h = d // 2
    a1, a2 = a[..., :h], a[..., h:]
    b1, b2 = b[..., :h], b[..., h:]
    # (a1, a2)(b1, b2) = (a1 b1 - b2* a2, b2 a1 + a2 b1*)
    lo = cd_multiply(a1, b1) - cd_multiply(cd_conj(b2), a2)
    hi = cd_multiply(b2, a1) + cd_multiply(a2, cd_conj(b1))
    return np.concatenate([lo, hi], axis=-1)


def cd_conj(a):
    out = -a
    out[..., 0] = a[..., 0]
    return out


def cd_inverse(a):
    """Multiplicative inverse: conj(a) / ||a||^2."""
    n2 = np.sum(a * a, axis=-1, keepdims=True)
    if np.any(n2 == 0):
        raise MultidimError("zero-norm block has no inverse")
    return cd_conj(a) / n2


@dataclass
class MappedMessage:
    """Classical message m plus the algebra dimension it was built with."""

    values: np.ndarray
    dim: int

    def tobytes(self):
        """Raw little-endian float64 serialization for replay files."""
        return np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def frombytes(cls, raw, dim):
        return cls(np.frombuffer(raw, dtype="<f8").copy(), dim)


@dataclass
class VirtualObservation:
    """Noisy virtual-BPSK observation r with per-block noise scales.

    ``per_block_scale`` holds ||y_block|| for each block, recovered on
    Alice's side from the message norm (||m|| = sqrt(d)/||y||); it sets the
    variance of the virtual noise and hence the LLR normalization.
    """

    values: np.ndarray
    per_block_scale: np.ndarray
    dim: int


def map_message(u, y, d):
    """Bob's mapping m = M(u, y): per block, u divided by y in the algebra.

    Parameters
    ----------
    u : ndarray of {-1, +1}, length N
    y : ndarray of float, length N
    d : int, one of 1, 2, 4, 8

    Returns
    -------
    MappedMessage
    """
    _check_dim(d)
    ub = _blocks(u, d, "u")
    yb = _blocks(y, d, "y")
    if ub.shape != yb.shape:
        raise MultidimError("u and y lengths differ")
    if not np.all(np.abs(ub) == 1.0):
        raise MultidimError("u entries must be +-1")
    mb = cd_multiply(ub, cd_inverse(yb))
    return MappedMessage(values=mb.reshape(-1), dim=d)


def demap(m, x, d):
    """Alice's inverse mapping r = M^{-1}(m, x): per block, m times x."""
    _check_dim(d)
    if isinstance(m, MappedMessage):
        if m.dim != d:
            raise MultidimError("message dimension mismatch")
        mv = m.values
    else:
        mv = m
    mb = _blocks(mv, d, "m")
    xb = _blocks(x, d, "x")
    if mb.shape != xb.shape:
        raise MultidimError("m and x lengths differ")
    if np.any(np.sum(xb * xb, axis=-1) == 0):
        raise MultidimError("zero-norm x block")
    m_norm2 = np.sum(mb * mb, axis=-1)
    if np.any(m_norm2 == 0):
        raise MultidimError("zero-norm m block")
    # ||m|| = sqrt(d)/||y||, so the y norm is recoverable from m alone
    scale = np.sqrt(d / m_norm2)
    rb = cd_multiply(mb, xb)
    return VirtualObservation(values=rb.reshape(-1), per_block_scale=scale, dim=d)


def llr_from_observation(r, sigma_z2, block_norms=None, d=None):
    """Per-bit LLRs of the virtual BPSK channel.

    The virtual channel per block is r = u - m (x) z (algebra product), so
    the noise seen on r is Gaussian with per-block variance
    sigma_eff^2 = (sigma_z^2 / 2) * d / ||y_block||^2 and the LLR is the
    linear form 2 r_i / sigma_eff^2, positive when bit 0 (u = +1) is more
    likely.  With the y norms this is the exact likelihood ratio, not an
    approximation (see :func:`exact_llr`); ``block_norms`` defaults to the
    scales recorded by :func:`demap`.
    """
    if sigma_z2 <= 0:
        raise MultidimError("sigma_z2 must be positive")
    if isinstance(r, VirtualObservation):
        d = r.dim
        block_norms = r.per_block_scale
        rv = r.values
    else:
        rv = np.asarray(r, dtype=np.float64)
        if d is None or block_norms is None:
            raise MultidimError("raw arrays require explicit block_norms and d")
    _check_dim(d)
    rb = _blocks(rv, d, "r")
    block_norms = np.asarray(block_norms, dtype=np.float64)
    if block_norms.size != rb.shape[0]:
        raise MultidimError("one block norm per block required")
    sigma_eff2 = (sigma_z2 / 2.0) * d / (block_norms**2)
    llr = 2.0 * rb / sigma_eff2[:, None]
    return np.clip(llr.reshape(-1), -LLR_MAX, LLR_MAX)


def exact_llr(m, x, sigma_z2, d):
    """Exact per-bit LLRs of the virtual channel, by direct summation.

    Given m, x and u, Bob's quadratures are fully determined,
    y = m^{-1} (m y) = m^{-1} u, so the likelihood of each BPSK pattern is
    the Gaussian density of y - x.  The LLR marginalizes the 2^(d-1)
    patterns per side.  Serves as the oracle for the Gaussian approximation.
    """
    _check_dim(d)
    if isinstance(m, MappedMessage):
        m = m.values
    mb = _blocks(m, d, "m")
    xb = _blocks(x, d, "x")
    nblocks = mb.shape[0]
    patterns = np.array(
        [[1 - 2 * ((p >> i) & 1) for i in range(d)] for p in range(2**d)],
        dtype=np.float64,
    )  # (2^d, d)
    minv = cd_inverse(mb)  # (nb, d)
    # y candidate for every (block, pattern): m^{-1} * u
    y = cd_multiply(minv[:, None, :], patterns[None, :, :])  # (nb, 2^d, d)
    # log-likelihood of each pattern; noise variance sigma_z2/2 per coord
    ll = -np.sum((y - xb[:, None, :]) ** 2, axis=-1) / sigma_z2
    out = np.empty((nblocks, d))
    for i in range(d):
        up = patterns[:, i] > 0
        a = _logsumexp(ll[:, up])
        b = _logsumexp(ll[:, ~up])
        out[:, i] = a - b
    return np.clip(out.reshape(-1), -LLR_MAX, LLR_MAX)


def _logsumexp(a):
    amax = a.max(axis=-1, keepdims=True)
    return (amax + np.log(np.sum(np.exp(a - amax), axis=-1, keepdims=True)))[..., 0]
