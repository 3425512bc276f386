"""
Decay studies: norm time series, slope fits and the rates they are compared with.

Two pipelines produce norm series. The lattice pipeline evolves a periodic
grid field; the polar pipeline integrates the closed-form spectrum over
log-spaced radial Gauss panels times a uniform angular rule, with no box
and no wrap-around, and is the one acceptance relies on.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from numpy.polynomial.legendre import leggauss
from scipy.stats import linregress

from src.errors import AnalysisError, ParameterError
from src.propagator import (
    apply_propagator,
    apply_reference,
    evolve,
    first_order_field,
    first_order_profile,
    propagator_norm,
    reference_evolve,
)
from src.spectral_field import (
    GridSpec,
    InitialDataSpec,
    make_initial_data,
    sobolev_norm,
    spectral_cutoff,
)
from src.symbol_core import (
    BRANCHES,
    FREQUENCY_REGIMES,
    ModelParams,
    exact_eigenvalues,
    predicted_remainder_exponent,
    principal_eigenvalues,
    radial_power,
)
from src.zones_stability import ZoneConfig, zone_weights


logger = logging.getLogger(__name__)

PIPELINES = ("lattice", "polar")
TARGETS = ("solution", "diffusion-gap")
ORIGINS = ("U0", "u0", "u1")

GAUSS_ORDER = 16
QUADRATURE_FLOOR = 1e-8
MAX_REFINEMENTS = 7
EXACT_FLOOR = 1e-300
EXACT_ULPS = 64.0


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log(norm) against log(1+t) inside a window."""

    slope: float
    stderr: float
    window: Tuple[float, float]
    n_points: int
    intercept: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        """Fit as a JSON-ready dict."""
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "window": list(self.window),
            "n_points": self.n_points,
        }


class TheoreticalRates(NamedTuple):
    base_rate: float
    refinement_q: float


@dataclass(frozen=True)
class StudyConfig:
    """Everything a decay or diffusion study needs."""

    params: ModelParams
    data: InitialDataSpec = field(default_factory=InitialDataSpec)
    s: float = 0.0
    m: Optional[float] = 1.0
    gamma: Optional[float] = None
    pipeline: str = "polar"
    times: Tuple[float, ...] = tuple(np.geomspace(1e2, 1e4, 25))
    window: Tuple[float, float] = (1e2, 1e4)
    zone: ZoneConfig = field(default_factory=ZoneConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    angles: int = 64
    quadrature_tolerance: float = 1e-8
    threads: int = 1

    def __post_init__(self):
        errors = []
        if self.pipeline not in PIPELINES:
            errors.append(f"pipeline must be one of {PIPELINES}")
        if self.s < 0:
            errors.append("s must be non-negative")
        if (self.m is None) == (self.gamma is None):
            errors.append("exactly one of m and gamma must be set")
        times = np.asarray(self.times, dtype=float)
        if times.size == 0 or np.any(times < 0) or np.any(np.diff(times) <= 0):
            errors.append("times must be non-negative and increasing")
        if not 0 < self.window[0] < self.window[1]:
            errors.append("window endpoints must be positive and increasing")
        if self.angles < 4:
            errors.append("angles must be at least 4")
        if self.threads < 1:
            errors.append("threads must be at least 1")
        if errors:
            raise ParameterError("; ".join(errors))
        object.__setattr__(self, "times", tuple(float(t) for t in times))

    def to_dict(self) -> Dict[str, object]:
        """Study settings as a JSON-ready dict."""
        return {
            "params": self.params.to_dict(),
            "data": self.data.to_dict(),
            "s": self.s,
            "m": self.m,
            "gamma": self.gamma,
            "pipeline": self.pipeline,
            "times": list(self.times),
            "window": list(self.window),
            "zone": self.zone.to_dict(),
            "grid": self.grid.to_dict(),
            "angles": self.angles,
        }


@dataclass(frozen=True)
class ResidualOrderFit:
    """
    Fitted log-log slope of |exact - principal| per eigenvalue branch.

    A branch whose residual sits at rounding level everywhere is stored as
    None (exact to precision).
    """

    regime: str
    predicted: Dict[str, float]
    exponents: Dict[str, Optional[float]]
    stderr: Dict[str, Optional[float]]
    band: Tuple[float, float]
    n: int

    def branch_passes(self, branch: str, tolerance: float) -> bool:
        fitted = self.exponents[branch]
        if fitted is None:
            return True
        # large-r remainders are upper bounds as r grows: steeper is better
        if self.regime == "small":
            return fitted >= self.predicted[branch] - tolerance
        return fitted <= self.predicted[branch] + tolerance

    def passes(self, tolerance: float) -> bool:
        return all(self.branch_passes(branch, tolerance) for branch in self.exponents)

    def to_dict(self) -> Dict[str, object]:
        """Exponents per branch, with exact branches marked."""
        return {
            "regime": self.regime,
            "predicted": self.predicted,
            "exponents": {k: ("exact" if v is None else v) for k, v in self.exponents.items()},
            "stderr": self.stderr,
            "band": list(self.band),
            "n": self.n,
        }


def _localizer(cfg: StudyConfig):
    return lambda r: np.asarray(zone_weights(cfg.zone, r).chi_int)


def _lattice_series(cfg: StudyConfig, target: str, localized: bool) -> List[float]:
    p = cfg.params
    initial = make_initial_data(cfg.data, cfg.grid)
    W0 = first_order_field(initial, p, workers=cfg.threads)
    trajectory = evolve(W0, p, cfg.times, threads=cfg.threads)
    weight = _localizer(cfg) if localized else None

    values = []
    for t, snapshot in zip(trajectory.times, trajectory.fields):
        if target == "diffusion-gap":
            reference = reference_evolve(W0, p, cfg.zone, t)
            snapshot = snapshot.replace_data(snapshot.data - reference.data)
        values.append(sobolev_norm(snapshot, cfg.s, weight))
    return values


class _PolarIntegrand:
    """Angular integral of the weighted |W(t, xi)|^2 at radial nodes, times r."""

    def __init__(self, cfg: StudyConfig, target: str, localized: bool):
        self.cfg = cfg
        self.target = target
        self.localized = localized
        self.profile = first_order_profile(cfg.data, cfg.params)
        phi = 2.0 * np.pi * np.arange(cfg.angles) / cfg.angles
        self.cos, self.sin = np.cos(phi), np.sin(phi)

    def __call__(self, r: np.ndarray, t: float) -> np.ndarray:
        cfg = self.cfg
        radius = np.broadcast_to(r[:, None], (r.size, self.cos.size))
        W0 = np.asarray(self.profile(radius * self.cos, radius * self.sin))
        W = apply_propagator(cfg.params, radius, t, W0)
        if self.target == "diffusion-gap":
            W = W - apply_reference(cfg.params, radius, t, W0, cfg.zone.eps)
        angular = 2.0 * np.pi * np.mean(np.sum(np.abs(W) ** 2, axis=0), axis=1)
        weight = radial_power(r, 2.0 * cfg.s)
        if self.localized:
            weight = weight * np.asarray(zone_weights(cfg.zone, r).chi_int) ** 2
        return angular * weight * r


def _panel_edges(cfg: StudyConfig, per_decade: int) -> np.ndarray:
    upper = spectral_cutoff(cfg.data)
    lower = QUADRATURE_FLOOR * upper
    decades = np.log10(upper / lower)
    edges = np.geomspace(lower, upper, int(np.ceil(decades * per_decade)) + 1)
    breaks = [b for b in cfg.zone.int_band if lower < b < upper]
    return np.union1d(np.concatenate([[0.0], edges]), breaks)


def _gauss_panels(integrand, t: float, edges: np.ndarray) -> float:
    nodes, weights = leggauss(GAUSS_ORDER)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    r = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return float(np.sum(integrand(r, t) * w))


def _polar_norm(cfg: StudyConfig, integrand: _PolarIntegrand, t: float) -> float:
    per_decade = 2
    previous = _gauss_panels(integrand, t, _panel_edges(cfg, per_decade))
    for _ in range(MAX_REFINEMENTS):
        per_decade *= 2
        value = _gauss_panels(integrand, t, _panel_edges(cfg, per_decade))
        if abs(value - previous) <= cfg.quadrature_tolerance * abs(value):
            break
        previous = value
    else:
        logger.warning(f"Polar quadrature at t={t:g} did not reach tolerance {cfg.quadrature_tolerance:g}")
    return float(np.sqrt(max(value, 0.0) / (2.0 * np.pi) ** 2))


def norm_series(
    cfg: StudyConfig, target: str = "solution", localized: Optional[bool] = None
) -> List[Tuple[float, float]]:
    """
    (t, norm) pairs of the H^s norm of the solution or of the diffusion gap.

    The gap is always localized by chi_int; pass localized=True to localize
    the solution the same way for comparison.
    """
    if target not in TARGETS:
        raise AnalysisError(f"target must be one of {TARGETS}, got {target!r}")
    if localized is None:
        localized = target == "diffusion-gap"

    logger.info(
        f"Norm series: {target}, pipeline={cfg.pipeline}, s={cfg.s}, {len(cfg.times)} times"
    )
    if cfg.pipeline == "lattice":
        values = _lattice_series(cfg, target, localized)
    else:
        integrand = _PolarIntegrand(cfg, target, localized)
        values = Parallel(n_jobs=cfg.threads, prefer="threads")(
            delayed(_polar_norm)(cfg, integrand, t) for t in cfg.times
        )
    return list(zip(cfg.times, (float(v) for v in values)))


def fit_decay(series: Sequence[Tuple[float, float]], window: Tuple[float, float]) -> DecayFit:
    """
    Ordinary least squares of log(norm) against log(1+t) within the window.

    Raises:
        AnalysisError: If fewer than 5 points fall inside the window or a
            norm there is not positive
    """
    t_min, t_max = window
    if not 0 < t_min < t_max:
        raise AnalysisError(f"Window must be positive and increasing, got {window}")
    points = np.asarray([(t, v) for t, v in series if t_min <= t <= t_max], dtype=float)
    if len(points) < 5:
        raise AnalysisError(f"Fit window {window} holds {len(points)} points, need at least 5")
    t, values = points[:, 0], points[:, 1]
    if np.any(values <= 0):
        raise AnalysisError("Norms inside the fit window must be positive")

    result = linregress(np.log1p(t), np.log(values))
    fit = DecayFit(
        slope=float(result.slope),
        stderr=float(result.stderr),
        window=(float(t_min), float(t_max)),
        n_points=len(points),
        intercept=float(result.intercept),
    )
    logger.debug(f"Decay fit: {fit.to_dict()}")
    return fit


def refinement_q(rho: float, theta: float) -> float:
    """Extra decay of the diffusion gap; continuous across rho + theta = 1."""
    if rho + theta < 1.0:
        return (2.0 * theta - 1.0) / (2.0 - 2.0 * rho)
    return (1.0 - 2.0 * rho) / (2.0 - 2.0 * rho)


def theoretical_rates(
    p: ModelParams,
    s: float,
    m: Optional[float] = None,
    gamma: Optional[float] = None,
    zero_mean: bool = True,
    origin: str = "U0",
) -> TheoreticalRates:
    """
    Decay rate of the H^s norm for an L^m or weighted L^{1,gamma} data class.

    The rate is stated for data placed on the first-order variable. Data
    given as u1 or u0 reaches the slow modes through factors |xi|^{1-2 rho}
    and |xi|, which adds to the rate.
    """
    if s < 0:
        raise ParameterError(f"s must be non-negative, got {s}")
    if (m is None) == (gamma is None):
        raise ParameterError("Exactly one of m and gamma selects the data class")
    if origin not in ORIGINS:
        raise ParameterError(f"origin must be one of {ORIGINS}, got {origin!r}")

    scale = 2.0 - 2.0 * p.rho
    if m is not None:
        if not 1.0 <= m <= 2.0:
            raise ParameterError(f"m must lie in [1, 2], got {m}")
        base = s / scale + (2.0 - m) / (m * scale)
    else:
        if not 0.0 < gamma <= 1.0:
            raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
        base = (s + gamma) / scale + 1.0 / scale if zero_mean else (s + 1.0) / scale

    if origin == "u1":
        base += (1.0 - 2.0 * p.rho) / scale
    elif origin == "u0":
        base += 1.0 / scale

    return TheoreticalRates(base_rate=base, refinement_q=refinement_q(p.rho, p.theta))


def residual_order_fit(
    p: ModelParams, regime: str, band: Tuple[float, float], n: int = 40
) -> ResidualOrderFit:
    """
    Fit the remainder order of the principal eigenvalue terms on a log-spaced band.

    Raises:
        ParameterError: If the band is outside the asymptotic regime or n < 20
    """
    if regime not in FREQUENCY_REGIMES:
        raise ParameterError(f"regime must be one of {FREQUENCY_REGIMES}, got {regime!r}")
    r_min, r_max = band
    if n < 20:
        raise ParameterError(f"Residual fit needs n >= 20, got {n}")
    if not 0 < r_min < r_max:
        raise ParameterError(f"Band must be positive and increasing, got {band}")
    if regime == "small" and r_max > 1e-2:
        raise ParameterError("Small-frequency band must end at or below 1e-2")
    if regime == "large" and r_min < 1e2:
        raise ParameterError("Large-frequency band must start at or above 1e2")

    r = np.geomspace(r_min, r_max, n)
    exact = exact_eigenvalues(p, r).as_array()
    principal = principal_eigenvalues(p, r, regime).as_array()
    residual = np.abs(exact - principal)
    threshold = np.maximum(EXACT_FLOOR, EXACT_ULPS * np.finfo(float).eps * np.abs(exact))

    exponents, errors = {}, {}
    for index, branch in enumerate(BRANCHES):
        above = residual[index] > threshold[index]
        if np.count_nonzero(above) < 5:
            logger.warning(f"Branch {branch} is exact to precision on {band}")
            exponents[branch], errors[branch] = None, None
            continue
        fit = linregress(np.log(r[above]), np.log(residual[index][above]))
        exponents[branch], errors[branch] = float(fit.slope), float(fit.stderr)

    result = ResidualOrderFit(
        regime=regime,
        predicted={branch: predicted_remainder_exponent(p, regime, branch) for branch in BRANCHES},
        exponents=exponents,
        stderr=errors,
        band=(float(r_min), float(r_max)),
        n=int(n),
    )
    logger.info(f"Residual orders ({regime}): {result.to_dict()['exponents']}, predicted {result.predicted}")
    return result


def gevrey_indicator(
    p: ModelParams,
    t: float,
    c_prime: float,
    samples: Sequence[float],
    weight_exponent: Optional[float] = None,
    zone: Optional[ZoneConfig] = None,
) -> float:
    """
    sup over samples of e^{c' r^e t} |e^{-B(r) t}|.

    e defaults to 2 - 2 theta, or 0.1 when theta = 1 where the smoothing
    gain is absent and the indicator diverges. Samples must lie in the
    exterior zone r > N of the given zones.
    """
    zone = zone or ZoneConfig()
    r = np.asarray(samples, dtype=float)
    if r.size == 0:
        raise ParameterError("Gevrey samples must be nonempty")
    if np.any(r <= zone.N):
        raise ParameterError(f"Gevrey samples must lie in the exterior zone r > {zone.N:g}, got min {r.min():g}")
    if t < 0 or c_prime <= 0:
        raise ParameterError("Gevrey indicator needs t >= 0 and c_prime > 0")
    if weight_exponent is None:
        weight_exponent = 2.0 - 2.0 * p.theta if p.theta < 1.0 else 0.1

    norms = np.asarray(propagator_norm(p, r, t))
    with np.errstate(divide="ignore"):
        log_values = c_prime * radial_power(r, weight_exponent) * t + np.log(norms)
    indicator = float(np.exp(np.max(log_values)))
    logger.info(f"Gevrey indicator at t={t:g}, c'={c_prime:.4g}, exponent {weight_exponent:.3g}: {indicator:.4g}")
    return indicator
