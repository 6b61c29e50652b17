"""Rate and security math: efficiencies, Holevo bound, penalties, bounds.

All quantities are bits per pulse.  The Holevo bound assumes Gaussian
collective attacks on a Gaussian-modulated coherent-state protocol; detector
efficiency and electronic noise are trusted (not credited to Eve) by default,
with an untrusted mode behind a flag.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelError, link_budget, mutual_information


class SecurityError(ValueError):
    """Infeasible efficiency or non-physical covariance."""


@dataclass
class EfficiencyReport:
    beta: float
    scheme: str  # "crc" | "outer"
    n_crc: int | None = None
    r_out: float | None = None


@dataclass
class SkrResult:
    skr: float  # clamped at 0
    raw: float  # unclamped value, kept for analysis
    below_zero: bool


def beta_crc(r, n, n_crc, i_ab):
    """Reconciliation efficiency with a CRC of n_crc discarded info bits:
    beta = (R N - n_crc) / (N I_AB)."""
    if i_ab <= 0:
        raise SecurityError("i_ab must be positive")
    if n_crc < 0:
        raise SecurityError("n_crc must be non-negative")
    if n_crc >= r * n:
        raise SecurityError(
            f"n_crc = {n_crc} consumes all {r * n:.6g} info bits (beta <= 0)"
        )
    return (r * n - n_crc) / (n * i_ab)


def beta_outer(r, r_out, i_ab):
    """Efficiency with the outer-code penalty: beta = R R_out / I_AB."""
    if i_ab <= 0:
        raise SecurityError("i_ab must be positive")
    if not 0.0 < r_out <= 1.0:
        raise SecurityError("r_out must be in (0, 1]")
    return r * r_out / i_ab


def crc_beta_reduction(r, n, n_crc):
    """Fractional reduction of beta caused by a CRC: n_crc / (R N), capped at 1."""
    return min(1.0, n_crc / (r * n))


def _g(x):
    """Gaussian entropy g(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2)."""
    if x < 1.0 - 1e-9:
        raise SecurityError(f"symplectic eigenvalue {x} below 1")
    if x <= 1.0 + 1e-12:
        return 0.0
    a = (x + 1.0) / 2.0
    b = (x - 1.0) / 2.0
    return a * math.log2(a) - b * math.log2(b)


def covariance_matrix(p):
    """4x4 covariance of the entangled two-mode state after the channel.

    Ordering (x_A, p_A, x_B, p_B); detector imperfections are not included
    (they are conditioned on separately in the trusted model).
    """
    v = p.v_a + 1.0
    t = p.transmittance
    chi_line = (1.0 - t) / t + p.xi_bob
    cz = math.sqrt(t * (v * v - 1.0))
    bb = t * (v + chi_line)
    gamma = np.zeros((4, 4))
    gamma[0, 0] = gamma[1, 1] = v
    gamma[2, 2] = gamma[3, 3] = bb
    gamma[0, 2] = gamma[2, 0] = cz
    gamma[1, 3] = gamma[3, 1] = -cz
    return gamma


def holevo_bound(p, detection="homodyne", trusted=True):
    """Holevo information chi_BE for collective Gaussian attacks.

    Standard entangling-cloner bound computed from the symplectic spectra of
    the shared state before and after Bob's measurement.
    """
    v = p.v_a + 1.0
    t = p.transmittance
    eps = p.xi_bob
    if trusted:
        chi_line = (1.0 - t) / t + eps
        if detection == "homodyne":
            chi_det = (1.0 - p.eta + p.nu_el) / p.eta
        elif detection == "heterodyne":
            chi_det = (1.0 + (1.0 - p.eta) + 2.0 * p.nu_el) / p.eta
        else:
            raise ChannelError(f"unknown detection {detection!r}")
        t_eff = t
    else:
        # all detection imperfections attributed to Eve: fold them into an
        # effective channel of transmittance eta T
        t_eff = p.eta * t
        chi_line = (1.0 - t_eff) / t_eff + (p.eta * t * eps + p.nu_el) / t_eff
        chi_det = 0.0

    chi_tot = chi_line + chi_det / t_eff

    a_sym = v * v * (1.0 - 2.0 * t_eff) + 2.0 * t_eff + t_eff**2 * (v + chi_line) ** 2
    b_sym = t_eff**2 * (v * chi_line + 1.0) ** 2
    disc = a_sym * a_sym - 4.0 * b_sym
    if disc < 0:
        if disc < -1e-9 * max(1.0, a_sym * a_sym):
            raise SecurityError("non-physical covariance")
        disc = 0.0
    l1 = math.sqrt(max((a_sym + math.sqrt(disc)) / 2.0, 1.0))
    l2 = math.sqrt(max((a_sym - math.sqrt(disc)) / 2.0, 1.0))

    sb = math.sqrt(b_sym)
    denom = t_eff * (v + chi_tot)
    if detection == "homodyne":
        c_sym = (a_sym * chi_det + v * sb + t_eff * (v + chi_line)) / denom
        d_sym = sb * (v + sb * chi_det) / denom
    else:
        c_sym = (
            a_sym * chi_det**2
            + b_sym
            + 1.0
            + 2.0 * chi_det * (v * sb + t_eff * (v + chi_line))
            + 2.0 * t_eff * (v * v - 1.0)
        ) / denom**2
        d_sym = ((v + sb * chi_det) / denom) ** 2
    disc2 = c_sym * c_sym - 4.0 * d_sym
    if disc2 < 0:
        if disc2 < -1e-9 * max(1.0, c_sym * c_sym):
            raise SecurityError("non-physical conditional covariance")
        disc2 = 0.0
    l3 = math.sqrt(max((c_sym + math.sqrt(disc2)) / 2.0, 1.0))
    l4 = math.sqrt(max((c_sym - math.sqrt(disc2)) / 2.0, 1.0))

    return _g(l1) + _g(l2) - _g(l3) - _g(l4)


def finite_size_penalty(n_privacy, eps_bar=1e-10, eps_pa=1e-10):
    """Finite-size penalty for privacy-amplification blocklength n_privacy:
    Delta_n = 7 sqrt(log2(2/eps_bar)/n) + (2/n) log2(1/eps_pa)."""
    if n_privacy < 1e4:
        raise SecurityError("n_privacy below 10^4 is not supported")
    return 7.0 * math.sqrt(math.log2(2.0 / eps_bar) / n_privacy) + (
        2.0 / n_privacy
    ) * math.log2(1.0 / eps_pa)


def secret_key_rate(fer, beta, i_ab, chi_be, delta_n):
    """SKR = (1 - FER)(beta I_AB - chi_BE - Delta_n), clamped at 0 in .skr."""
    if not 0.0 <= fer <= 1.0:
        raise SecurityError("FER outside [0, 1]")
    raw = (1.0 - fer) * (beta * i_ab - chi_be - delta_n)
    return SkrResult(skr=max(0.0, raw), raw=raw, below_zero=raw < 0.0)


def plob_bound(t):
    """Repeaterless upper bound -log2(1 - T) for channel transmittance T."""
    if not 0.0 < t < 1.0:
        raise SecurityError("PLOB bound needs 0 < T < 1 (unbounded at T = 1)")
    return -math.log2(1.0 - t)


def devetak_winter(i_ab, chi_be):
    """Achievable rate max(0, I_AB - chi_BE) under perfect reconciliation."""
    return max(0.0, i_ab - chi_be)


def devetak_winter_at(p, detection="homodyne", trusted=True):
    """DW bound evaluated from system parameters."""
    snr, _ = link_budget(p)
    return devetak_winter(
        mutual_information(snr, detection), holevo_bound(p, detection, trusted)
    )
