"""Closed-form predictions used to cross-validate the numerical engine.

All functions are pure.  The classical double-path variance is kept only as
a labeled contrast: it is the prediction that coherent splitting refutes,
and must never be used as a validation oracle.
"""

import cmath
import math
from dataclasses import dataclass

from .errors import OutOfRange


@dataclass(frozen=True)
class LZParams:
    """Sweep parameters of one avoided crossing."""

    c: float      # effective coupling (half the minimal gap)
    udot: float   # sweep rate of the on-site potential

    def __post_init__(self):
        if self.udot <= 0.0:
            raise ValueError("udot must be positive")
        if self.c < 0.0:
            raise ValueError("c must be non-negative")


@dataclass(frozen=True)
class CyclePrediction:
    """Inputs of the per-cycle fluctuation formulas."""

    lam_ccw: float
    lam_cw: float
    phi: float     # dynamical-phase difference between the two crossings
    p_lz: float

    def __post_init__(self):
        if not 0.0 <= self.p_lz <= 1.0:
            raise ValueError("p_lz must lie in [0, 1]")


def lz_probability(p: LZParams) -> float:
    """Probability of jumping between adiabatic levels in one linear sweep."""
    return math.exp(-2.0 * math.pi * p.c * p.c / p.udot)


def single_path_moments(p: float, k: int) -> float:
    """k-th moment of the single-path counting spectrum: p^floor((k+1)/2).

    The spectrum behind it: eigenvalues +-sqrt(p) with weights
    (1 +- sqrt(p))/2; see :func:`single_path_spectrum`.
    """
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"p = {p} outside [0, 1]")
    if k < 0:
        raise ValueError("k must be non-negative")
    return p ** ((k + 1) // 2)


def single_path_spectrum(p: float):
    """Eigenvalues and weights of the single-path charge operator."""
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"p = {p} outside [0, 1]")
    root = math.sqrt(p)
    return ((-root, 0.5 * (1.0 - root)), (root, 0.5 * (1.0 + root)))


def double_path_moments(lam: float, p: float):
    """(mean, variance) of the charge through one branch of a double path.

    The coherent passage scales the single-path operator by the splitting
    ratio, so mean = lam * p and variance = lam^2 (1-p) p.  Exact splitting:
    at p = 1 the variance vanishes for every lam.
    """
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"p = {p} outside [0, 1]")
    return lam * p, lam * lam * (1.0 - p) * p


def classical_double_path_variance(lam: float, p: float) -> float:
    """The refuted probabilistic prediction (1 - lam p) lam p.

    Kept only for contrast plots and reports; never a validation oracle.
    """
    q = lam * p
    if not 0.0 <= q <= 1.0:
        raise OutOfRange(f"lam*p = {q} outside [0, 1]")
    return (1.0 - q) * q


def stirring_charge(lam_ccw: float, lam_cw: float) -> float:
    """Net transported charge per cycle in the adiabatic limit."""
    return lam_ccw - lam_cw


def stirring_variance(pred: CyclePrediction) -> float:
    """Per-cycle variance |lam_ccw + lam_cw e^{i phi}|^2 P_LZ.

    The two crossings contribute coherently; the phase difference phi is the
    gap integral between the crossing times.
    """
    amp = pred.lam_ccw + pred.lam_cw * cmath.exp(1j * pred.phi)
    return (amp.real**2 + amp.imag**2) * pred.p_lz


def residual_occupation(phi: float, p_lz: float) -> float:
    """Leftover occupation after a full cycle: 4 sin^2(phi/2) P_LZ.

    Interference enters with the opposite sign relative to the counting
    variance (the sweep rate flips sign between the crossings), so this is
    maximal exactly where the equal-ratio counting variance vanishes.
    """
    if not 0.0 <= p_lz <= 1.0:
        raise ValueError("p_lz must lie in [0, 1]")
    s = math.sin(0.5 * phi)
    return 4.0 * s * s * p_lz


def fgr_scale(omega: float, t_p: float) -> float:
    """Order-of-magnitude off-resonant leakage scale exp(-omega * t_p).

    No prefactor is claimed: the formula pins only the exponential scale.
    Substituting omega -> c and t_p -> c/udot reproduces the c^2/udot
    exponent scale of the crossing probability.
    """
    if omega < 0.0 or t_p < 0.0:
        raise ValueError("omega and t_p must be non-negative")
    return math.exp(-omega * t_p)
