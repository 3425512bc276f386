"""
Frequency zones, the dissipative structure eta, and stability certificates.

The radial frequency axis is split into a small zone (r < eps), a bounded
zone and an exterior zone (r > N) by a smooth partition of unity. The
bounded-zone certificate scans the closed-form eigenvalues; the pointwise
certificate fits constants (C, c) with |e^{-B(r) t}| <= C e^{-c eta(r) t}
over finite sample sets.
"""

import logging
from dataclasses import dataclass
from typing import Dict, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq

from src.errors import ParameterError, StabilityError
from src.propagator import propagator_norm
from src.symbol_core import (
    ModelParams,
    RealOrArray,
    _as_output,
    dissipation_sigma,
    exact_eigenvalues,
    radial_power,
)


logger = logging.getLogger(__name__)

DEFAULT_MAX_CONSTANT = 100.0


@dataclass(frozen=True)
class ZoneConfig:
    """Radii and relative transition widths of the three frequency zones."""

    eps: float = 0.1
    N: float = 10.0
    w_int: float = 0.5
    w_ext: float = 0.5

    def __post_init__(self):
        lower = self.eps * (1.0 - self.w_int)
        upper = self.N * (1.0 + self.w_ext)
        if not (0.0 < lower < self.eps < self.N < upper):
            raise ParameterError(
                "Zone radii must satisfy 0 < eps*(1-w_int) < eps < N < N*(1+w_ext), "
                f"got eps={self.eps}, N={self.N}, w_int={self.w_int}, w_ext={self.w_ext}"
            )
        if not (0.0 <= self.w_int <= 1.0 and 0.0 <= self.w_ext <= 1.0):
            raise ParameterError("Transition widths must lie in [0, 1]")

    @property
    def int_band(self) -> tuple:
        """Radial band on which chi_int falls from 1 to 0."""
        return (self.eps * (1.0 - self.w_int), self.eps)

    @property
    def ext_band(self) -> tuple:
        """Radial band on which chi_ext rises from 0 to 1."""
        return (self.N, self.N * (1.0 + self.w_ext))

    def to_dict(self) -> Dict[str, float]:
        """Zone cutoffs as a JSON-ready dict."""
        return {"eps": self.eps, "N": self.N, "w_int": self.w_int, "w_ext": self.w_ext}


class ZoneWeights(NamedTuple):
    chi_int: RealOrArray
    chi_bdd: RealOrArray
    chi_ext: RealOrArray


@dataclass(frozen=True)
class GapCertificate:
    """Result of the bounded-zone spectral gap scan."""

    min_real_part: float
    argmin_r: float
    samples: int
    identity_margin: float

    def to_dict(self) -> Dict[str, float]:
        """Certificate as a JSON-ready dict."""
        return {
            "min_real_part": self.min_real_part,
            "argmin_r": self.argmin_r,
            "samples": self.samples,
            "identity_margin": self.identity_margin,
        }


class PointwiseConstants(NamedTuple):
    C: float
    c: float


def smoothstep(x: ArrayLike) -> np.ndarray:
    """Quintic smoothstep, 0 below 0 and 1 above 1, C^2 in between."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def zone_weights(z: ZoneConfig, r: ArrayLike) -> ZoneWeights:
    """Partition of unity chi_int + chi_bdd + chi_ext = 1 at every r."""
    r = np.asarray(r, dtype=float)
    int_lo, int_hi = z.int_band
    ext_lo, ext_hi = z.ext_band
    chi_int = 1.0 - smoothstep((r - int_lo) / (int_hi - int_lo))
    chi_ext = smoothstep((r - ext_lo) / (ext_hi - ext_lo))
    chi_bdd = 1.0 - chi_int - chi_ext
    return ZoneWeights(_as_output(chi_int), _as_output(chi_bdd), _as_output(chi_ext))


def eta(p: ModelParams, r: ArrayLike) -> RealOrArray:
    """Dissipative structure r^{2-2 rho} / (1 + r^{2 theta - 2 rho})."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterError("Radial frequency must be non-negative")
    value = radial_power(r, 2.0 - 2.0 * p.rho) / (1.0 + radial_power(r, 2.0 * p.theta - 2.0 * p.rho))
    return _as_output(value)


def imaginary_root_certificate(p: ModelParams, r: ArrayLike) -> RealOrArray:
    """
    Gap 2(a^2+b^2) sigma^2 + (b^2-a^2)^2 r^2.

    A purely imaginary eigenvalue i*d would force this sum of positive
    terms to vanish.
    """
    r = np.asarray(r, dtype=float)
    sigma = np.asarray(dissipation_sigma(p, r))
    gap = 2.0 * (p.a**2 + p.b**2) * sigma**2 + (p.b**2 - p.a**2) ** 2 * r**2
    return _as_output(gap)


def spectral_gap_scan(p: ModelParams, z: ZoneConfig, samples: int) -> GapCertificate:
    """
    Minimum real part of the eigenvalues over log-spaced r in [eps, N].

    Raises:
        ParameterError: If fewer than two samples are requested
        StabilityError: If any sample has a non-positive real part or a
            non-positive identity margin
    """
    if samples < 2:
        raise ParameterError(f"Spectral gap scan needs at least 2 samples, got {samples}")

    logger.info(f"Scanning bounded zone [{z.eps}, {z.N}] with {samples} samples")
    r = np.geomspace(z.eps, z.N, samples)
    min_real = np.asarray(exact_eigenvalues(p, r).min_real_part())
    margin = np.asarray(imaginary_root_certificate(p, r))

    worst = int(np.argmin(min_real))
    if min_real[worst] <= 0:
        raise StabilityError(
            f"Non-positive real part {min_real[worst]:.3e} at r={r[worst]:.6g}"
        )
    if np.min(margin) <= 0:
        raise StabilityError(f"Imaginary-root identity margin vanished at r={r[np.argmin(margin)]:.6g}")

    certificate = GapCertificate(
        min_real_part=float(min_real[worst]),
        argmin_r=float(r[worst]),
        samples=int(samples),
        identity_margin=float(np.min(margin)),
    )
    logger.info(f"Bounded-zone certificate: {certificate.to_dict()}")
    return certificate


def pointwise_constants_fit(
    p: ModelParams,
    r_samples: Sequence[float],
    t_samples: Sequence[float],
    max_constant: float = DEFAULT_MAX_CONSTANT,
) -> PointwiseConstants:
    """
    Fit (C, c) with |e^{-B(r) t}| <= C e^{-c eta(r) t} on every sample pair.

    C(c) = max over samples of |e^{-B(r) t}| e^{c eta(r) t} is nondecreasing
    in c, so the largest feasible c is the root of log C(c) = log max_constant.

    Raises:
        ParameterError: If the sample sets are empty or hold no positive time
        StabilityError: If no c > 0 admits C <= max_constant
    """
    r = np.asarray(r_samples, dtype=float)
    t = np.asarray(t_samples, dtype=float)
    if r.size == 0 or t.size == 0:
        raise ParameterError("Pointwise fit needs nonempty frequency and time samples")
    if np.any(r <= 0) or np.any(t < 0):
        raise ParameterError("Pointwise fit needs r > 0 and t >= 0")
    if not np.any(t > 0):
        raise ParameterError("Pointwise fit needs at least one positive time sample")

    norms = np.asarray(propagator_norm(p, r[:, None], t[None, :]))
    exposure = np.asarray(eta(p, r))[:, None] * t[None, :]
    with np.errstate(divide="ignore"):
        log_norms = np.log(norms)
    log_limit = np.log(max_constant)

    def excess(c: float) -> float:
        return float(np.max(log_norms + c * exposure)) - log_limit

    if excess(0.0) > 0:
        raise StabilityError(
            f"Propagator norm {np.exp(excess(0.0) + log_limit):.3e} exceeds C={max_constant} even for c=0"
        )

    upper = 1.0
    while excess(upper) <= 0:
        upper *= 2.0
        if upper > 1e12:
            raise StabilityError("Pointwise envelope does not bound c; samples carry no decay")

    tolerance = 1e-12 * upper
    c = brentq(excess, 0.0, upper, xtol=tolerance)
    # step inside the feasible side of the root
    while c > 0 and excess(c) > 0:
        c = max(c - tolerance, 0.0)
    if c <= 0:
        raise StabilityError(f"No positive c admits C <= {max_constant}")

    constant = float(np.exp(excess(c) + log_limit))
    logger.info(f"Pointwise constants: C={constant:.4g}, c={c:.6g}")
    return PointwiseConstants(C=constant, c=float(c))


def exterior_coefficient(p: ModelParams, samples: Sequence[float]) -> float:
    """Largest k with min_j Re lambda_j(r) >= k r^{2-2 theta} on the exterior samples."""
    r = np.asarray(samples, dtype=float)
    if r.size == 0 or np.any(r <= 0):
        raise ParameterError("Exterior samples must be positive and nonempty")
    min_real = np.asarray(exact_eigenvalues(p, r).min_real_part())
    coefficient = float(np.min(min_real / radial_power(r, 2.0 - 2.0 * p.theta)))
    logger.debug(f"Exterior coefficient {coefficient:.6g} over {r.size} samples")
    return coefficient
