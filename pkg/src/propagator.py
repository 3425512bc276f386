"""
Exact per-frequency evolution of the first-order system W_t + B W = 0.

Each 2x2 block of B is (sigma/2) I + C_k with C_k^2 = delta_k^2 I, so

    e^{-block t} = e^{-sigma t/2} (cosh(delta_k t) I - t phi(delta_k t) C_k),

phi(z) = sinh(z)/z. The even and odd coefficients are evaluated in three
branches: a short series near delta t = 0, a form built on the slow root
for real delta (no overflow, no cancellation), and cos/sin for imaginary
delta.

Vectors of W and u are stored components first, matching FourierField.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike, NDArray

from src.errors import ParameterError, ReferenceRateError, ZeroModeError
from src.spectral_field import (
    FourierField,
    InitialData,
    InitialDataSpec,
    SpectralProfile,
    scalar_profile,
    transform,
)
from src.symbol_core import (
    ModelParams,
    _as_output,
    blocks_to_full,
    block_roots,
    dissipation_sigma,
    radial_power,
    structure_matrices,
)

if TYPE_CHECKING:
    from src.zones_stability import ZoneConfig


logger = logging.getLogger(__name__)

SERIES_RADIUS = 1e-4


@dataclass(frozen=True, eq=False)
class PropagatorBlock:
    """e^{-B(r) t} at one frequency and time, kept as its two blocks."""

    r: float
    t: float
    blocks: NDArray[np.complex128]

    @property
    def matrix(self) -> NDArray[np.complex128]:
        return blocks_to_full(self.blocks)

    @property
    def norm(self) -> float:
        return float(np.max(np.linalg.svd(self.blocks, compute_uv=False)))


@dataclass(frozen=True)
class ReferenceRates:
    """Diagonal rates of the reference system in T1 coordinates."""

    lambda1: object
    lambda2: object
    lambda3: object
    lambda4: object

    def as_array(self) -> NDArray[np.float64]:
        return np.stack([np.asarray(v, dtype=float) for v in (self.lambda1, self.lambda2, self.lambda3, self.lambda4)])


class ZeroMode(NamedTuple):
    u_hat: NDArray[np.complex128]
    ut_hat: NDArray[np.complex128]


@dataclass(frozen=True)
class Trajectory:
    times: Tuple[float, ...]
    fields: List[FourierField]
    zero_mode: List[ZeroMode]

    def __len__(self) -> int:
        return len(self.times)


def evolution_coefficients(
    sigma: ArrayLike,
    delta_sq: ArrayLike,
    slow_root: ArrayLike,
    t: ArrayLike,
    series_radius: float = SERIES_RADIUS,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Even and odd coefficients of a block exponential.

    Returns (e^{-sigma t/2} cosh(delta t), e^{-sigma t/2} t phi(delta t)),
    with delta^2 = delta_sq possibly negative and slow_root = sigma/2 - delta
    when delta is real.
    """
    sigma, delta_sq, slow_root, t = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (sigma, delta_sq, slow_root, t))
    )
    z_sq = delta_sq * t**2
    even = np.empty(sigma.shape)
    odd = np.empty(sigma.shape)

    series = (np.abs(z_sq) < series_radius**2) | (delta_sq == 0)
    real = ~series & (delta_sq > 0)
    imaginary = ~series & (delta_sq < 0)

    decay = np.exp(-0.5 * sigma[series] * t[series])
    z = z_sq[series]
    even[series] = decay * (1.0 + z / 2.0 + z**2 / 24.0)
    odd[series] = decay * t[series] * (1.0 + z / 6.0 + z**2 / 120.0)

    delta = np.sqrt(delta_sq[real])
    tr = t[real]
    slow = np.exp(-slow_root[real] * tr)
    gap = 2.0 * delta * tr
    even[real] = 0.5 * slow * (1.0 + np.exp(-gap))
    odd[real] = -slow * np.expm1(-gap) / (2.0 * delta)

    omega = np.sqrt(-delta_sq[imaginary])
    ti = t[imaginary]
    decay = np.exp(-0.5 * sigma[imaginary] * ti)
    even[imaginary] = decay * np.cos(omega * ti)
    odd[imaginary] = decay * np.sin(omega * ti) / omega

    return even, odd


def block_exponentials(p: ModelParams, r: ArrayLike, t: ArrayLike) -> NDArray[np.complex128]:
    """
    e^{-block t} for both blocks, shape broadcast(r, t).shape + (2, 2, 2).

    Defined at r = 0 as well, where it reduces to the zero-mode evolution.
    """
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ParameterError("Propagation time must be non-negative")
    sigma = np.asarray(dissipation_sigma(p, r))
    result = np.empty(r.shape + (2, 2, 2), dtype=complex)

    for index, speed in enumerate(p.speeds):
        minus, _ = block_roots(sigma, speed, r)
        delta_sq = 0.25 * sigma**2 - speed**2 * r**2
        even, odd = evolution_coefficients(sigma, delta_sq, minus.real, t)
        wave = 1j * speed * r
        coupling = -0.5 * odd * sigma
        result[..., index, 0, 0] = even + odd * wave
        result[..., index, 0, 1] = coupling
        result[..., index, 1, 0] = coupling
        result[..., index, 1, 1] = even - odd * wave

    return result


def block_propagator(p: ModelParams, r: float, t: float) -> PropagatorBlock:
    """Propagator e^{-B(r) t} at one positive frequency."""
    if r <= 0:
        raise ParameterError(f"block_propagator needs r > 0, got {r}")
    return PropagatorBlock(r=float(r), t=float(t), blocks=block_exponentials(p, r, t))


def propagator_norm(p: ModelParams, r: ArrayLike, t: ArrayLike):
    """Operator 2-norm of e^{-B(r) t}, the larger of the two block norms."""
    blocks = block_exponentials(p, r, t)
    singular = np.linalg.svd(blocks, compute_uv=False)
    return _as_output(np.max(singular, axis=(-2, -1)))


def apply_propagator(p: ModelParams, r: ArrayLike, t: float, W: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Evolve W of shape (4,) + r.shape to time t."""
    P = block_exponentials(p, r, t)
    out = np.empty(np.broadcast_shapes(W.shape, (4,) + P.shape[:-3]), dtype=complex)
    for k in range(2):
        first, second = W[k], W[k + 2]
        out[k] = P[..., k, 0, 0] * first + P[..., k, 0, 1] * second
        out[k + 2] = P[..., k, 1, 0] * first + P[..., k, 1, 1] * second
    return out


def _direction(xi: NDArray[np.float64]) -> Tuple[NDArray, NDArray, NDArray]:
    """Radius and unit direction of xi, with (1, 0) at the origin."""
    r = np.hypot(xi[0], xi[1])
    nonzero = r > 0
    safe = np.where(nonzero, r, 1.0)
    e1 = np.where(nonzero, xi[0] / safe, 1.0)
    e2 = np.where(nonzero, xi[1] / safe, 0.0)
    return r, e1, e2


def _rotate(e1, e2, u):
    """M(eta) u; M is symmetric and its own inverse."""
    return np.stack([e1 * u[0] + e2 * u[1], e2 * u[0] - e1 * u[1]])


def _speed_column(p: ModelParams, ndim: int) -> NDArray[np.float64]:
    return np.array(p.speeds).reshape((2,) + (1,) * ndim)


def u_to_W(u0_hat: ArrayLike, u1_hat: ArrayLike, xi: ArrayLike, p: ModelParams) -> NDArray[np.complex128]:
    """First-order variable (v_t + i|xi| diag(b,a) v, v_t - i|xi| diag(b,a) v)."""
    u0_hat = np.asarray(u0_hat, dtype=complex)
    u1_hat = np.asarray(u1_hat, dtype=complex)
    r, e1, e2 = _direction(np.asarray(xi, dtype=float))
    v = _rotate(e1, e2, u0_hat)
    vt = _rotate(e1, e2, u1_hat)
    wave = 1j * r * _speed_column(p, r.ndim) * v
    return np.concatenate([vt + wave, vt - wave])


def W_to_u(
    W: ArrayLike, xi: ArrayLike, p: ModelParams, allow_zero_mode: bool = False
) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Recover (u_hat, ut_hat) from W.

    Raises:
        ZeroModeError: At xi = 0 the displacement is tracked separately;
            with allow_zero_mode it is returned as NaN there instead.
    """
    W = np.asarray(W, dtype=complex)
    r, e1, e2 = _direction(np.asarray(xi, dtype=float))
    at_origin = r == 0
    if np.any(at_origin) and not allow_zero_mode:
        raise ZeroModeError("zero-mode: displacement tracked separately")

    vt = 0.5 * (W[:2] + W[2:])
    scale = 1j * np.where(at_origin, 1.0, r) * _speed_column(p, r.ndim)
    v = np.where(at_origin, np.nan, 0.5 * (W[:2] - W[2:]) / scale)
    return _rotate(e1, e2, v), _rotate(e1, e2, vt)


def zero_mode_evolution(
    u0_hat0: ArrayLike, u1_hat0: ArrayLike, p: ModelParams, t: float
) -> ZeroMode:
    """Exact solution of u_tt + sigma(0) u_t = 0 at the zero frequency."""
    if t < 0:
        raise ParameterError("Propagation time must be non-negative")
    u0 = np.asarray(u0_hat0, dtype=complex)
    u1 = np.asarray(u1_hat0, dtype=complex)
    if dissipation_sigma(p, 0.0) == 0:
        return ZeroMode(u_hat=u0 + t * u1, ut_hat=u1.copy())
    return ZeroMode(u_hat=u0 - np.expm1(-t) * u1, ut_hat=np.exp(-t) * u1)


def first_order_profile(spec: InitialDataSpec, p: ModelParams) -> SpectralProfile:
    """Closed-form W0(xi) for the data spec."""
    scalar = scalar_profile(spec)

    if spec.target == "U0":
        weights = np.asarray(spec.polarization)

        def profile(xi1, xi2):
            values = np.asarray(scalar(xi1, xi2))
            return weights.reshape((-1,) + (1,) * values.ndim) * values

        return profile

    def profile(xi1, xi2):
        values = np.asarray(scalar(xi1, xi2), dtype=complex)
        active = np.stack([values, np.zeros_like(values)])
        quiet = np.zeros_like(active)
        u0, u1 = (active, quiet) if spec.target == "u0" else (quiet, active)
        return u_to_W(u0, u1, np.stack([np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float)]), p)

    return profile


def first_order_field(initial: InitialData, p: ModelParams, workers: int = 1) -> FourierField:
    """Spectral W0 on the lattice, with its closed form attached."""
    if initial.U0 is not None:
        return transform(initial.U0, "forward", workers=workers)

    grid = initial.u0.grid
    xi = np.stack(grid.frequencies())
    W0 = u_to_W(initial.u0.spectrum(workers), initial.u1.spectrum(workers), xi, p)
    return FourierField(grid, W0, "spectral", first_order_profile(initial.spec, p), 1e-8)


def initial_zero_displacement(initial: InitialData, workers: int = 1) -> NDArray[np.complex128]:
    """
    Mean displacement u0_hat(0) of the data, the seed of the zero-mode track.

    W carries no displacement at the origin, so first-order (U0) data starts
    the track at zero.
    """
    if initial.u0 is None:
        return np.zeros(2, dtype=complex)
    return np.array(initial.u0.spectrum(workers)[:, 0, 0], dtype=complex)


def _zero_displacement(W0: FourierField, zero_displacement: Optional[ArrayLike], p: ModelParams, t: float) -> ZeroMode:
    vt = 0.5 * (W0.data[:2, 0, 0] + W0.data[2:, 0, 0])
    ut = _rotate(1.0, 0.0, vt)
    u = np.zeros(2, dtype=complex) if zero_displacement is None else np.asarray(zero_displacement, dtype=complex)
    return zero_mode_evolution(u, ut, p, t)


def evolve(
    W0: FourierField,
    p: ModelParams,
    times: Sequence[float],
    threads: int = 1,
    zero_displacement: Optional[ArrayLike] = None,
) -> Trajectory:
    """
    Exact evolution of a spectral first-order field to each requested time.

    The zero-frequency displacement, which W does not carry, is evolved
    from zero_displacement (default 0) and returned with the trajectory.

    Raises:
        ParameterError: If W0 is not a 4-component spectral field or the
            times are negative or not increasing
    """
    if W0.domain != "spectral" or W0.components != 4:
        raise ParameterError("evolve needs a 4-component spectral field")
    times = tuple(float(t) for t in times)
    if not times:
        raise ParameterError("evolve needs at least one time")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ParameterError(f"times must be non-negative and increasing, got {list(times)}")

    r = W0.grid.radial_frequencies()

    def snapshot(t: float) -> FourierField:
        return FourierField(W0.grid, apply_propagator(p, r, t, W0.data), "spectral")

    logger.debug(f"Evolving n={W0.grid.n_points} field to {len(times)} times on {threads} worker(s)")
    fields = Parallel(n_jobs=threads, prefer="threads")(delayed(snapshot)(t) for t in times)
    zero_mode = [_zero_displacement(W0, zero_displacement, p, t) for t in times]
    return Trajectory(times=times, fields=list(fields), zero_mode=zero_mode)


def reference_rate_values(p: ModelParams, r: ArrayLike) -> NDArray[np.float64]:
    """
    The four reference rates at every r, shape (4,) + r.shape.

    At r = 0 they take the limits (0, 0, sigma(0), sigma(0)).
    """
    r = np.asarray(r, dtype=float)
    slow = radial_power(r, 2.0 - 2.0 * p.rho)
    low = radial_power(r, 2.0 * p.rho)
    if p.regime == "below":
        fast = [low + radial_power(r, 2.0 * p.theta) - k**2 * slow for k in p.speeds]
    elif p.regime == "equal":
        fast = [low + (1.0 - k**2) * slow for k in p.speeds]
    else:
        fast = [low - k**2 * slow for k in p.speeds]
    return np.stack([p.b**2 * slow, p.a**2 * slow] + fast)


def reference_rates(p: ModelParams, r: ArrayLike) -> ReferenceRates:
    """
    Reference-system rates at positive frequencies.

    Raises:
        ParameterError: If any r <= 0
        ReferenceRateError: If any rate is not positive
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("reference_rates needs r > 0")
    values = reference_rate_values(p, r)
    if np.any(values <= 0):
        worst = float(np.min(values))
        raise ReferenceRateError(f"Reference rate {worst:.3e} <= 0; restrict to the small-frequency zone")
    return ReferenceRates(*(_as_output(v) for v in values))


def apply_reference(
    p: ModelParams, r: ArrayLike, t: float, W: NDArray[np.complex128], support_radius: float
) -> NDArray[np.complex128]:
    """T1 diag(e^{-rate t}) T1^{-1} W where r < support_radius, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    support = r < support_radius
    rates = reference_rate_values(p, r)
    bad = support & (r > 0) & np.any(rates <= 0, axis=0)
    if np.any(bad):
        raise ReferenceRateError(
            f"Reference rate not positive at r={float(np.min(r[bad])):.4g} inside the support radius {support_radius}"
        )

    t1 = structure_matrices(p, 1.0).T1
    # T1^2 = 2 I
    diagonal = 0.5 * np.einsum("ij,j...->i...", t1, W)
    diagonal = diagonal * np.exp(-np.where(support, rates, 0.0) * t)
    result = np.einsum("ij,j...->i...", t1, diagonal)
    return np.where(support, result, 0.0)


def reference_evolve(W0: FourierField, p: ModelParams, zone: "ZoneConfig", t: float) -> FourierField:
    """Reference solution T1 W_tilde(t) on the lattice, zero outside the chi_int support."""
    if t < 0:
        raise ParameterError("Propagation time must be non-negative")
    r = W0.grid.radial_frequencies()
    data = apply_reference(p, r, t, W0.data, zone.eps)
    return FourierField(W0.grid, data, "spectral")

