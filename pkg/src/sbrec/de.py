"""Protograph density evolution under the Gaussian approximation.

Messages on each protograph edge type are modeled as symmetric Gaussians
N(mu, 2 mu); variable nodes add means, check nodes combine through
E(mu) = E[tanh(X/2)], which is tabulated once by numerical integration and
inverted by interpolation.  The decoding threshold is found by bisecting the
channel SNR of the virtual binary-input AWGN channel (LLR mean 2 snr).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import mutual_information, snr_for_mutual_information

MU_MAX = 1200.0
MU_MIN = 1e-9
MU_SUCCESS = 1000.0


class DeError(ValueError):
    """Pathological protograph or failed bisection."""


@dataclass
class ThresholdResult:
    snr_threshold: float
    beta_threshold: float
    iterations: int
    converged: bool


@lru_cache(maxsize=1)
def _tables():
    """Grids of log(mu) vs log(-log E(mu)) for the check-node nonlinearity.

    For mu <= 1, E = E[tanh(u/2)] is integrated directly; beyond that the
    complementary phi = 1 - E is integrated instead so that -log E stays
    accurate far past the resolution of 1 - E in double precision.
    """
    mu = np.geomspace(MU_MIN, MU_MAX, 4000)
    lle = np.empty_like(mu)
    for i, m in enumerate(mu):
        if m <= 1.0:
            lle[i] = math.log(-math.log(_e_small(m)))
        else:
            phi = _phi_large(m)
            nle = phi if phi < 1e-12 else -math.log1p(-phi)
            lle[i] = math.log(nle)
    lle = np.minimum.accumulate(lle)  # clean residual integration jitter
    return np.log(mu), lle


def _quad_grid(mu, npts=20001):
    sd = math.sqrt(2.0 * mu)
    lo = min(-40.0, mu - 14.0 * sd)
    hi = mu + 14.0 * sd
    u = np.linspace(lo, hi, npts)
    dens = np.exp(-((u - mu) ** 2) / (4.0 * mu)) / math.sqrt(4.0 * math.pi * mu)
    return u, dens


def _e_small(mu):
    """E[tanh(u/2)], u ~ N(mu, 2 mu); accurate for small means."""
    u, dens = _quad_grid(mu)
    val = float(np.trapezoid(np.tanh(u / 2.0) * dens, u))
    return min(max(val, 1e-300), 1.0 - 1e-16)


def _phi_large(mu):
    """phi(mu) = 1 - E = E[2/(1+e^u)], integrated in log space for stability."""
    u, dens = _quad_grid(mu)
    with np.errstate(divide="ignore"):
        logf = math.log(2.0) - np.logaddexp(0.0, u) + np.log(dens)
    fmax = logf.max()
    val = math.exp(fmax) * float(np.trapezoid(np.exp(logf - fmax), u))
    return min(max(val, 1e-320), 1.0 - 1e-16)


def _log_e(mu):
    """log E(mu), vectorized; mu clipped into the tabulated range."""
    logmu, lle = _tables()
    m = np.clip(mu, MU_MIN, MU_MAX)
    y = np.interp(np.log(m), logmu, lle)
    return -np.exp(y)


def _mu_of_log_e(log_p):
    """Inverse of log E; log_p <= 0, saturating at MU_MAX."""
    logmu, lle = _tables()
    out = np.full_like(log_p, MU_MAX)
    ok = log_p < 0
    y = np.log(-log_p[ok])
    # lle decreasing -> reverse for np.interp
    out[ok] = np.exp(np.interp(y, lle[::-1], logmu[::-1]))
    return out


def _edges(proto):
    rows, cols, mult = [], [], []
    b = proto.base
    for i in range(proto.n_checks):
        for j in range(proto.n_vars):
            if b[i, j] > 0:
                rows.append(i)
                cols.append(j)
                mult.append(int(b[i, j]))
    return (
        np.array(rows),
        np.array(cols),
        np.array(mult, dtype=np.float64),
    )


def de_run(proto, snr, max_iters=10000):
    """Run density evolution at a fixed SNR.

    Returns (converged, iterations): converged means every variable type's
    posterior LLR mean reached the saturation cap.
    """
    er, ec, mult = _edges(proto)
    mu_ch = np.full(proto.n_vars, 2.0 * snr)
    for j in proto.punctured_cols:
        mu_ch[j] = 0.0
    mu_c = np.zeros(er.size)
    last_min = -np.inf
    for it in range(1, max_iters + 1):
        s_v = mu_ch + np.bincount(ec, weights=mult * mu_c, minlength=proto.n_vars)
        mu_v = s_v[ec] - mu_c
        le = _log_e(np.maximum(mu_v, 0.0))
        le = np.where(mu_v <= 0.0, -745.0, le)  # zero-mean input: E ~ 0
        s_c = np.bincount(er, weights=mult * le, minlength=proto.n_checks)
        log_p = np.minimum(s_c[er] - le, 0.0)
        mu_c = _mu_of_log_e(log_p)
        post = mu_ch + np.bincount(ec, weights=mult * mu_c, minlength=proto.n_vars)
        pmin = post.min()
        if pmin >= MU_SUCCESS:
            return True, it
        if it % 200 == 0:
            if pmin - last_min < 1e-9 * max(1.0, abs(last_min)):
                return False, it
            last_min = pmin
    return False, max_iters


def de_threshold(proto, tol=1e-4, max_iters=10000):
    """Decoding threshold of a protograph by bisection over SNR.

    ``tol`` is the final bisection width on the linear SNR.  The efficiency
    threshold is beta = R / I_AB(snr_threshold) with R the design rate.
    """
    if tol <= 0:
        raise DeError("tol must be positive")
    r = proto.design_rate
    snr_cap = snr_for_mutual_information(r)

    hi = snr_cap * 2.0
    ok, hi_iters = de_run(proto, hi, max_iters)
    doublings = 0
    while not ok:
        hi *= 2.0
        doublings += 1
        if doublings > 12:
            raise DeError("density evolution never converges; bad protograph")
        ok, hi_iters = de_run(proto, hi, max_iters)
    lo = snr_cap / 16.0
    ok_lo, _ = de_run(proto, lo, max_iters)
    while ok_lo:
        lo /= 4.0
        if lo < 1e-12:
            raise DeError("density evolution converges at arbitrarily low SNR")
        ok_lo, _ = de_run(proto, lo, max_iters)

    iters = hi_iters
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok, it = de_run(proto, mid, max_iters)
        if ok:
            hi, iters = mid, it
        else:
            lo = mid
    snr_th = 0.5 * (lo + hi)
    beta = r / mutual_information(snr_th)
    return ThresholdResult(
        snr_threshold=snr_th,
        beta_threshold=beta,
        iterations=iters,
        converged=True,
    )
