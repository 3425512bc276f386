"""
Acceptance suite: each criterion recomputes one quantitative claim and
returns a verdict with the numbers behind it.

The parameter sets cover the three regimes of rho + theta against 1:

    below: (1, 2, 0.2, 0.7)    equal: (1, 2, 0.25, 0.75)    above: (1, 2, 0.3, 0.9)
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.analysis import (
    StudyConfig,
    fit_decay,
    gevrey_indicator,
    norm_series,
    refinement_q,
    residual_order_fit,
    theoretical_rates,
)
from src.errors import LabError
from src.propagator import W_to_u, evolve, u_to_W
from src.spectral_field import (
    DATA_KINDS,
    FourierField,
    GridSpec,
    InitialDataSpec,
    make_initial_data,
    moment_bound_check,
    physical_norms,
    sobolev_norm,
    transform,
)
from src.symbol_core import (
    assemble_symbol,
    exact_eigenvalues,
    factored_quartic_coefficients,
    quartic_coefficients,
    validate_params,
)
from src.zones_stability import (
    ZoneConfig,
    exterior_coefficient,
    pointwise_constants_fit,
    spectral_gap_scan,
)


logger = logging.getLogger(__name__)

REGIME_SETS = {
    "below": (1.0, 2.0, 0.2, 0.7),
    "equal": (1.0, 2.0, 0.25, 0.75),
    "above": (1.0, 2.0, 0.3, 0.9),
}
ENERGY_SETS = {"equal": (1.0, 2.0, 0.25, 0.75), "rho-zero": (1.0, 2.0, 0.0, 1.0)}
GEVREY_SMOOTHING_SET = (1.0, 2.0, 0.25, 0.75)
GEVREY_ROUGH_SET = (1.0, 2.0, 0.25, 1.0)
SMALL_ORDER_BAND = (1e-4, 1e-2)
# the b-plus remainder below the threshold changes sign near r = 1e2, so the
# large-r fit starts two decades later
LARGE_ORDER_BAND = (1e4, 1e6)


@dataclass
class Tolerances:
    rate: float = 0.1
    order: float = 0.15

    def to_dict(self) -> Dict[str, float]:
        """Tolerances as a JSON-ready dict."""
        return {"rate": self.rate, "order": self.order}


@dataclass
class CriterionResult:
    """Verdict of one acceptance criterion."""

    name: str
    passed: bool
    details: Dict[str, object] = field(default_factory=dict)
    elapsed: float = 0.0
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        """Criterion verdict, error and details; timing is left out."""
        return {
            "criterion": self.name,
            "verdict": "pass" if self.passed else "fail",
            "error": self.error,
            "details": self.details,
        }


def _params(values):
    return validate_params(*values)


def _random_params(rng: np.random.Generator):
    a = rng.uniform(0.2, 3.0)
    return validate_params(a, a + rng.uniform(0.1, 3.0), rng.uniform(0.0, 0.49), rng.uniform(0.51, 1.0))


def check_factorization(seed: int, draws: int = 100) -> CriterionResult:
    """Quartic factorization and closed-form eigenvalues against a dense eigensolver."""
    rng = np.random.default_rng(seed)
    worst_coefficient = 0.0
    worst_eigenvalue = 0.0
    for _ in range(draws):
        p = _random_params(rng)
        r = 10.0 ** rng.uniform(-3.0, 3.0)
        printed = quartic_coefficients(p, r)
        product = factored_quartic_coefficients(p, r)
        scale = np.max(np.abs(printed))
        worst_coefficient = max(worst_coefficient, float(np.max(np.abs(printed - product)) / scale))

        exact = exact_eigenvalues(p, r).as_array()
        oracle = np.linalg.eigvals(assemble_symbol(p, r).full)
        distance = np.min(np.abs(exact[:, None] - oracle[None, :]), axis=1)
        worst_eigenvalue = max(worst_eigenvalue, float(np.max(distance) / np.max(np.abs(oracle))))

    return CriterionResult(
        name="factorization",
        passed=worst_coefficient <= 1e-12 and worst_eigenvalue <= 1e-10,
        details={"draws": draws, "coefficient_error": worst_coefficient, "eigenvalue_error": worst_eigenvalue},
    )


def _check_orders(name: str, regime: str, band, tolerances: Tolerances) -> CriterionResult:
    details = {}
    passed = True
    for label, values in REGIME_SETS.items():
        fit = residual_order_fit(_params(values), regime, band, n=40)
        ok = fit.passes(tolerances.order)
        passed = passed and ok
        details[label] = dict(fit.to_dict(), passed=ok)
    return CriterionResult(name=name, passed=passed, details=details)


def check_small_orders(tolerances: Tolerances) -> CriterionResult:
    return _check_orders("small-frequency-orders", "small", SMALL_ORDER_BAND, tolerances)


def check_large_orders(tolerances: Tolerances) -> CriterionResult:
    return _check_orders("large-frequency-orders", "large", LARGE_ORDER_BAND, tolerances)


def check_bounded_zone(samples: int = 100_000) -> CriterionResult:
    details = {}
    passed = True
    for label, values in REGIME_SETS.items():
        certificate = spectral_gap_scan(_params(values), ZoneConfig(eps=0.1, N=10.0), samples)
        ok = certificate.min_real_part >= 1e-3 and certificate.identity_margin > 0
        passed = passed and ok
        details[label] = dict(certificate.to_dict(), passed=ok)
    return CriterionResult(name="bounded-zone-stability", passed=passed, details=details)


def check_pointwise() -> CriterionResult:
    r = np.geomspace(1e-3, 1e3, 31)
    t = [0.0, 1.0, 10.0, 100.0]
    details = {}
    passed = True
    for label, values in REGIME_SETS.items():
        constants = pointwise_constants_fit(_params(values), r, t)
        ok = constants.c > 0 and constants.C <= 100.0
        passed = passed and ok
        details[label] = {"C": constants.C, "c": constants.c, "passed": ok}
    return CriterionResult(name="pointwise-estimate", passed=passed, details=details)


def _decay_slope(study: StudyConfig, target: str = "solution", localized: bool = False) -> float:
    return fit_decay(norm_series(study, target, localized), study.window).slope


def check_energy_decay(tolerances: Tolerances, threads: int = 1) -> CriterionResult:
    """
    Slopes for Gaussian data on the first-order variable.

    m = 1 is extremal for this data and must match; m = 2 is checked as
    the one-sided bound because a Gaussian also lies in L^1.
    """
    data = InitialDataSpec(kind="gaussian", target="U0")
    details = {}
    passed = True
    for label, values in ENERGY_SETS.items():
        p = _params(values)
        for s, m in ((0.0, 1.0), (1.0, 1.0), (0.0, 2.0)):
            study = StudyConfig(params=p, data=data, s=s, m=m, threads=threads)
            slope = _decay_slope(study)
            expected = -theoretical_rates(p, s, m=m).base_rate
            ok = slope <= expected + tolerances.rate if m == 2.0 else abs(slope - expected) <= tolerances.rate
            passed = passed and ok
            details[f"{label}/s={s:g}/m={m:g}"] = {"slope": slope, "expected": expected, "passed": ok}
    return CriterionResult(name="energy-decay", passed=passed, details=details)


def check_weighted_decay(tolerances: Tolerances, threads: int = 1) -> CriterionResult:
    p = _params(REGIME_SETS["equal"])
    data = InitialDataSpec(kind="gaussian-derivative", target="U0")
    study = StudyConfig(params=p, data=data, s=0.0, m=None, gamma=1.0, threads=threads)
    slope = _decay_slope(study)
    expected = -theoretical_rates(p, 0.0, gamma=1.0).base_rate
    ok = abs(slope - expected) <= tolerances.rate
    return CriterionResult(
        name="weighted-decay", passed=ok, details={"slope": slope, "expected": expected}
    )


def check_q_lattice(size: int = 20) -> Dict[str, object]:
    """q continuity across rho + theta = 1 and theta independence above it."""
    worst_continuity = 0.0
    worst_independence = 0.0
    for rho in np.linspace(0.0, 0.49, size):
        theta = 1.0 - rho
        below = (2.0 * theta - 1.0) / (2.0 - 2.0 * rho)
        worst_continuity = max(worst_continuity, abs(below - refinement_q(rho, theta)))
        above = [refinement_q(rho, th) for th in np.linspace(theta, 1.0, size + 1)[1:]]
        worst_independence = max(worst_independence, float(np.ptp(above)))
    return {"continuity_error": worst_continuity, "theta_spread_above": worst_independence}


def check_diffusion(tolerances: Tolerances, threads: int = 1) -> CriterionResult:
    data = InitialDataSpec(kind="gaussian", target="U0")
    details = {}
    passed = True
    for label, values in REGIME_SETS.items():
        p = _params(values)
        study = StudyConfig(params=p, data=data, s=0.0, m=1.0, threads=threads)
        solution = _decay_slope(study, "solution", localized=True)
        gap = _decay_slope(study, "diffusion-gap")
        q = refinement_q(p.rho, p.theta)
        ok = gap - solution <= -q + tolerances.order
        passed = passed and ok
        details[label] = {"solution_slope": solution, "gap_slope": gap, "q": q, "passed": ok}

    lattice = check_q_lattice()
    lattice_ok = lattice["continuity_error"] <= 1e-12 and lattice["theta_spread_above"] <= 1e-12
    details["q_lattice"] = dict(lattice, passed=lattice_ok)
    return CriterionResult(name="diffusion-refinement", passed=passed and lattice_ok, details=details)


def check_gevrey() -> CriterionResult:
    smooth = _params(GEVREY_SMOOTHING_SET)
    zone = ZoneConfig()
    exterior = np.geomspace(zone.ext_band[1], 1e4, 200)
    c_prime = 0.5 * exterior_coefficient(smooth, exterior)
    bounded = gevrey_indicator(smooth, 1.0, c_prime, exterior, zone=zone)

    rough = _params(GEVREY_ROUGH_SET)
    divergent = gevrey_indicator(rough, 1.0, 4.0, [1e4], weight_exponent=0.1)
    ok = bounded <= 2.0 and divergent > 1e3
    return CriterionResult(
        name="gevrey-smoothing",
        passed=ok,
        details={"c_prime": c_prime, "indicator_theta_075": bounded, "indicator_theta_1": divergent},
    )


def check_infrastructure(seed: int) -> CriterionResult:
    """Round trips, Parseval, semigroup, energy identity and the moment lemma."""
    rng = np.random.default_rng(seed)
    grid = GridSpec(64, 20.0)
    p = _params(REGIME_SETS["equal"])
    shape = (4, grid.n_points, grid.n_points)
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    physical = FourierField(grid, noise, "physical")
    spectral = transform(physical)
    back = transform(spectral, "inverse")
    round_trip = float(np.max(np.abs(back.data - noise)) / np.max(np.abs(noise)))

    l2_physical = np.sqrt(np.sum(np.abs(noise) ** 2) * grid.spacing**2)
    parseval = abs(sobolev_norm(spectral, 0.0) - l2_physical) / l2_physical

    one_step = evolve(spectral, p, [3.0]).fields[0]
    two_step = evolve(evolve(spectral, p, [1.0]).fields[0], p, [2.0]).fields[0]
    semigroup = float(np.max(np.abs(one_step.data - two_step.data)) / np.max(np.abs(one_step.data)))

    u0 = rng.standard_normal((2, 100)) + 1j * rng.standard_normal((2, 100))
    u1 = rng.standard_normal((2, 100)) + 1j * rng.standard_normal((2, 100))
    xi = rng.uniform(-5.0, 5.0, (2, 100))
    W = u_to_W(u0, u1, xi, p)
    u0_back, u1_back = W_to_u(W, xi, p)
    change_of_variables = float(max(np.max(np.abs(u0_back - u0)), np.max(np.abs(u1_back - u1))))

    r_sq = np.sum(xi**2, axis=0)
    projection = np.abs(xi[0] * u0[0] + xi[1] * u0[1]) ** 2
    energy = (
        2.0 * np.sum(np.abs(u1) ** 2, axis=0)
        + 2.0 * p.a**2 * r_sq * np.sum(np.abs(u0) ** 2, axis=0)
        + 2.0 * (p.b**2 - p.a**2) * projection
    )
    energy_error = float(np.max(np.abs(np.sum(np.abs(W) ** 2, axis=0) - energy) / energy))

    moment_grid = GridSpec(256, 80.0)
    moments = {}
    for kind in DATA_KINDS:
        initial = make_initial_data(InitialDataSpec(kind=kind, target="u1"), moment_grid)
        check = moment_bound_check(initial.u1, 1.0)
        moments[kind] = {"C_gamma": check.C_gamma, "holds": check.holds}
    integral = physical_norms(make_initial_data(InitialDataSpec(), moment_grid).u1, 1.0, 1.0).integral

    details = {
        "transform_round_trip": round_trip,
        "parseval": parseval,
        "semigroup": semigroup,
        "change_of_variables": change_of_variables,
        "energy_identity": energy_error,
        "moment_lemma": moments,
        "gaussian_integral": abs(integral[0]),
    }
    passed = (
        round_trip <= 1e-10
        and parseval <= 1e-8
        and semigroup <= 1e-9
        and change_of_variables <= 1e-12
        and energy_error <= 1e-12
        and all(m["holds"] for m in moments.values())
    )
    return CriterionResult(name="infrastructure", passed=passed, details=details)


def criteria(seed: int, tolerances: Tolerances, threads: int = 1) -> Dict[str, Callable[[], CriterionResult]]:
    """Criterion name to a zero-argument runner, in reporting order."""
    return {
        "factorization": lambda: check_factorization(seed),
        "small-frequency-orders": lambda: check_small_orders(tolerances),
        "large-frequency-orders": lambda: check_large_orders(tolerances),
        "bounded-zone-stability": check_bounded_zone,
        "pointwise-estimate": check_pointwise,
        "energy-decay": lambda: check_energy_decay(tolerances, threads),
        "weighted-decay": lambda: check_weighted_decay(tolerances, threads),
        "diffusion-refinement": lambda: check_diffusion(tolerances, threads),
        "gevrey-smoothing": check_gevrey,
        "infrastructure": lambda: check_infrastructure(seed),
    }


def run_acceptance(
    seed: int = 42,
    tolerances: Optional[Tolerances] = None,
    threads: int = 1,
    only: Optional[Sequence[str]] = None,
) -> List[CriterionResult]:
    """
    Run the selected criteria; a criterion that raises is recorded as failed.

    Raises:
        ValueError: If an unknown criterion is requested
    """
    suite = criteria(seed, tolerances or Tolerances(), threads)
    names = list(only) if only else list(suite)
    unknown = [name for name in names if name not in suite]
    if unknown:
        raise ValueError(f"Unknown acceptance criteria: {', '.join(unknown)}")

    results = []
    for index, name in enumerate(names, 1):
        logger.info(f"[{index}/{len(names)}] {name}")
        started = time.perf_counter()
        try:
            result = suite[name]()
        except LabError as e:
            logger.error(f"Criterion {name} raised: {e}")
            result = CriterionResult(name=name, passed=False, error=str(e))
        result.elapsed = time.perf_counter() - started
        logger.info(f"  {'PASS' if result.passed else 'FAIL'} ({result.elapsed:.2f}s)")
        results.append(result)
    return results
