"""AWGN model of the quantum channel and the link budget.

Quadratures are normalized so that E[x_i^2] = 1/2; all module boundaries
exchange only the dimensionless SNR and sigma_z^2 = 1/SNR, so the shot-noise
unit convention lives in this file alone.
"""

import math
from dataclasses import dataclass, replace

import numpy as np


class ChannelError(ValueError):
    """Non-physical parameters or an unreachable operating point."""


@dataclass
class SystemParams:
    """CV-QKD system parameters (shot-noise units, dB/km for attenuation)."""

    eta: float = 0.6  # detector quantum efficiency
    xi_bob: float = 0.001  # excess noise at Bob
    nu_el: float = 0.01  # electronic noise
    alpha_db_km: float = 0.2  # fibre attenuation
    distance_km: float = 0.0
    v_a: float = 1.0  # modulation variance

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ChannelError(f"eta {self.eta} outside (0, 1]")
        if self.xi_bob < 0 or self.nu_el < 0 or self.alpha_db_km < 0:
            raise ChannelError("noise and attenuation must be non-negative")
        if self.distance_km < 0:
            raise ChannelError("distance must be non-negative")
        if self.v_a is not None and self.v_a <= 0:
            raise ChannelError("modulation variance must be positive")

    @property
    def transmittance(self):
        return 10.0 ** (-self.alpha_db_km * self.distance_km / 10.0)


@dataclass
class QuadratureBlock:
    """Paired channel values: Alice's x, Bob's y = x + z."""

    x: np.ndarray
    y: np.ndarray
    sigma_z2: float


def link_budget(p):
    """Effective SNR and normalized channel noise variance.

    SNR = eta T V_A / (1 + nu_el + eta T xi_Bob) under the E[x^2] = 1/2
    normalization; sigma_z^2 = 1/SNR reproduces the scalar AWGN model.
    """
    t = p.transmittance
    snr = p.eta * t * p.v_a / (1.0 + p.nu_el + p.eta * t * p.xi_bob)
    if snr <= 0:
        raise ChannelError("non-positive SNR from these parameters")
    return snr, 1.0 / snr


def awgn_sample(n, snr, rng):
    """Draw n quadrature pairs: x ~ N(0, 1/2), y = x + z, z ~ N(0, 1/(2 snr))."""
    if n < 1:
        raise ChannelError("need at least one sample")
    if snr <= 0:
        raise ChannelError("snr must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    sigma_z2 = 1.0 / snr
    x = rng.normal(0.0, math.sqrt(0.5), size=n)
    z = rng.normal(0.0, math.sqrt(sigma_z2 / 2.0), size=n)
    return QuadratureBlock(x=x, y=x + z, sigma_z2=sigma_z2)


def mutual_information(snr, detection="homodyne"):
    """Gaussian-input AWGN mutual information, bits per channel use."""
    if snr <= 0:
        raise ChannelError("snr must be positive")
    if detection == "homodyne":
        return 0.5 * math.log2(1.0 + snr)
    if detection == "heterodyne":
        return math.log2(1.0 + snr)
    raise ChannelError(f"unknown detection {detection!r}")


def snr_for_mutual_information(i_ab, detection="homodyne"):
    """Closed-form inverse of :func:`mutual_information`."""
    if i_ab <= 0:
        raise ChannelError("target mutual information must be positive")
    if detection == "homodyne":
        return 2.0 ** (2.0 * i_ab) - 1.0
    if detection == "heterodyne":
        return 2.0**i_ab - 1.0
    raise ChannelError(f"unknown detection {detection!r}")


def solve_va(p, target_iab, detection="homodyne", rel_tol=1e-12, v_max=1e9):
    """Modulation variance achieving I_AB = target at the given distance.

    Monotone bisection on V_A; signals an unreachable target when even
    ``v_max`` cannot deliver it.
    """
    if target_iab <= 0:
        raise ChannelError("target mutual information must be positive")

    def iab(v):
        return mutual_information(link_budget(replace(p, v_a=v))[0], detection)

    lo, hi = 1e-12, 1.0
    while iab(hi) < target_iab:
        hi *= 4.0
        if hi > v_max:
            raise ChannelError(
                f"target I_AB = {target_iab} unreachable below V_A = {v_max}"
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if iab(mid) < target_iab:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return 0.5 * (lo + hi)
