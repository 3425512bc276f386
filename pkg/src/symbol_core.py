"""
Fourier symbol of the doubly dissipative elastic wave system.

After the partial Fourier transform and the rotation v = M(eta) u_hat the
system becomes W_t + B(|xi|; rho, theta) W = 0 with

    B = 1/2 (|xi|^{2 rho} + |xi|^{2 theta}) B0 + i |xi| B1.

B decouples into a pressure block (indices 1, 3, speed b) and a shear block
(indices 2, 4, speed a). Every eigenvalue comes from a 2x2 quadratic, so all
functions here work on numpy arrays of radial frequencies as well as on
scalars.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.errors import ParameterError


logger = logging.getLogger(__name__)

RealOrArray = Union[float, NDArray[np.float64]]
ComplexOrArray = Union[complex, NDArray[np.complex128]]

# rho + theta == 1 is decided with this absolute tolerance
REGIME_TOLERANCE = 1e-12

REGIMES = ("below", "equal", "above")
FREQUENCY_REGIMES = ("small", "large")
BRANCHES = ("b-minus", "a-minus", "b-plus", "a-plus")

# Fixed sign pattern shared by N2 and N3
_N_PATTERN = np.array(
    [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class ModelParams:
    """Validated wave speeds and dissipation exponents."""

    a: float
    b: float
    rho: float
    theta: float
    regime: str

    @property
    def speeds(self) -> Tuple[float, float]:
        """Block speeds in block order (pressure, shear)."""
        return (self.b, self.a)

    def to_dict(self) -> Dict[str, object]:
        """Parameters with their regime, for reports."""
        return {
            "a": self.a,
            "b": self.b,
            "rho": self.rho,
            "theta": self.theta,
            "regime": self.regime,
        }


@dataclass(frozen=True)
class SpectralSymbol:
    """Coefficient matrix B at one radial frequency, with its two blocks."""

    r: float
    sigma: float
    full: NDArray[np.complex128]
    block_b: NDArray[np.complex128]
    block_a: NDArray[np.complex128]


@dataclass(frozen=True)
class EigenQuadruple:
    """Eigenvalues of B labeled b-minus, a-minus, b-plus, a-plus."""

    lambda1: ComplexOrArray
    lambda2: ComplexOrArray
    lambda3: ComplexOrArray
    lambda4: ComplexOrArray

    def as_array(self) -> NDArray[np.complex128]:
        """Stack the branches along a leading axis of length 4."""
        return np.stack(
            [np.asarray(v, dtype=complex) for v in (self.lambda1, self.lambda2, self.lambda3, self.lambda4)]
        )

    def min_real_part(self) -> RealOrArray:
        """Smallest real part over the four branches."""
        return _as_output(np.min(self.as_array().real, axis=0))

    def labeled(self) -> Dict[str, ComplexOrArray]:
        return dict(zip(BRANCHES, (self.lambda1, self.lambda2, self.lambda3, self.lambda4)))


@dataclass(frozen=True)
class StructureMatrices:
    """Constant and frequency-dependent matrices of the diagonalization."""

    B0: NDArray[np.float64]
    B1: NDArray[np.float64]
    T1: NDArray[np.float64]
    M1: NDArray[np.float64]
    M2: NDArray[np.float64]
    N2: NDArray[np.complex128]
    N3: NDArray[np.complex128]

    @property
    def T1_inverse(self) -> NDArray[np.float64]:
        return np.linalg.inv(self.T1)


def _as_output(value: np.ndarray):
    """Return 0-d arrays as Python scalars and leave other arrays alone."""
    value = np.asarray(value)
    if value.ndim == 0:
        return value.item()
    return value


def classify_regime(rho: float, theta: float) -> str:
    """Place rho + theta below, on, or above the diffusion threshold 1."""
    total = rho + theta
    if abs(total - 1.0) <= REGIME_TOLERANCE:
        return "equal"
    return "below" if total < 1.0 else "above"


def validate_params(a: float, b: float, rho: float, theta: float) -> ModelParams:
    """
    Validate raw model parameters.

    Args:
        a: Shear wave speed
        b: Pressure wave speed
        rho: Lower dissipation exponent
        theta: Upper dissipation exponent

    Returns:
        ModelParams with the regime classification attached

    Raises:
        ParameterError: If any constraint is violated; the message names
            every violated constraint.
    """
    values = {"a": a, "b": b, "rho": rho, "theta": theta}
    not_finite = [name for name, value in values.items() if not np.isfinite(value)]
    if not_finite:
        raise ParameterError(f"Parameters must be finite: {', '.join(not_finite)}")

    violations = []
    if a <= 0:
        violations.append("a must be positive")
    if b <= a:
        violations.append("b must exceed a")
    if rho < 0:
        violations.append("rho must be non-negative")
    if rho >= 0.5:
        violations.append("rho must be below 1/2")
    if theta <= 0.5:
        violations.append("theta must exceed 1/2")
    if theta > 1:
        violations.append("theta must not exceed 1")

    if violations:
        raise ParameterError("; ".join(violations))

    params = ModelParams(
        a=float(a),
        b=float(b),
        rho=float(rho),
        theta=float(theta),
        regime=classify_regime(rho, theta),
    )
    logger.debug(f"Validated parameters: {params.to_dict()}")
    return params


def radial_power(r: ArrayLike, exponent: float) -> NDArray[np.float64]:
    """r**exponent with the convention 0**0 == 1."""
    return np.power(np.asarray(r, dtype=float), exponent)


def dissipation_sigma(p: ModelParams, r: ArrayLike) -> RealOrArray:
    """Dissipation scalar r^{2 rho} + r^{2 theta}."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterError("Radial frequency must be non-negative")
    return _as_output(radial_power(r, 2.0 * p.rho) + radial_power(r, 2.0 * p.theta))


def stiffness_and_rotation(
    p: ModelParams, eta: ArrayLike
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Stiffness matrix A(eta) and the rotation M(eta) for a unit direction.

    Raises:
        ParameterError: If eta is not a unit 2-vector
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (2,) or abs(np.linalg.norm(eta) - 1.0) > 1e-12:
        raise ParameterError(f"eta must be a unit 2-vector, got {eta.tolist()}")

    stiffness = p.a**2 * np.eye(2) + (p.b**2 - p.a**2) * np.outer(eta, eta)
    rotation = np.array([[eta[0], eta[1]], [eta[1], -eta[0]]])
    return stiffness, rotation


def coefficient_matrices(p: ModelParams) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """The constant matrices B0 and B1 of the first-order system."""
    b0 = np.array(
        [
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
        ]
    )
    b1 = np.diag([-p.b, -p.a, p.b, p.a])
    return b0, b1


def symbol_blocks(p: ModelParams, r: ArrayLike) -> NDArray[np.complex128]:
    """
    The two 2x2 blocks of B for every radial frequency in r.

    Returns:
        Array of shape r.shape + (2, 2, 2); axis -3 indexes the block
        (0 pressure/b, 1 shear/a).
    """
    r = np.asarray(r, dtype=float)
    half_sigma = 0.5 * np.asarray(dissipation_sigma(p, r))
    blocks = np.empty(r.shape + (2, 2, 2), dtype=complex)
    for index, speed in enumerate(p.speeds):
        wave = 1j * speed * r
        blocks[..., index, 0, 0] = half_sigma - wave
        blocks[..., index, 0, 1] = half_sigma
        blocks[..., index, 1, 0] = half_sigma
        blocks[..., index, 1, 1] = half_sigma + wave
    return blocks


def blocks_to_full(blocks: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Scatter (..., 2, 2, 2) blocks into (..., 4, 4) matrices."""
    full = np.zeros(blocks.shape[:-3] + (4, 4), dtype=complex)
    for index in range(2):
        rows = (index, index + 2)
        for i, row in enumerate(rows):
            for j, col in enumerate(rows):
                full[..., row, col] = blocks[..., index, i, j]
    return full


def full_to_blocks(full: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Gather (..., 4, 4) matrices into (..., 2, 2, 2) blocks."""
    blocks = np.empty(full.shape[:-2] + (2, 2, 2), dtype=complex)
    for index in range(2):
        rows = (index, index + 2)
        for i, row in enumerate(rows):
            for j, col in enumerate(rows):
                blocks[..., index, i, j] = full[..., row, col]
    return blocks


def assemble_symbol(p: ModelParams, r: float) -> SpectralSymbol:
    """Coefficient matrix B(r; rho, theta) and its blocks at one frequency."""
    if r < 0:
        raise ParameterError("Radial frequency must be non-negative")
    blocks = symbol_blocks(p, r)
    return SpectralSymbol(
        r=float(r),
        sigma=float(dissipation_sigma(p, r)),
        full=blocks_to_full(blocks),
        block_b=blocks[0].copy(),
        block_a=blocks[1].copy(),
    )


def block_roots(
    sigma: ArrayLike, speed: float, r: ArrayLike
) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Roots of lambda^2 - sigma lambda + speed^2 r^2 = 0.

    The minus root of a real discriminant is taken from Vieta's product so
    it keeps full relative precision when it is tiny. For a negative
    discriminant the minus root is the one with negative imaginary part.
    """
    sigma = np.asarray(sigma, dtype=float)
    r = np.asarray(r, dtype=float)
    product = speed**2 * r**2
    disc = sigma**2 - 4.0 * product
    real_case = disc >= 0
    root = np.sqrt(np.abs(disc))

    plus_real = 0.5 * (sigma + root)
    minus_real = np.divide(
        product, plus_real, out=np.zeros_like(plus_real), where=plus_real > 0
    )

    plus = np.where(real_case, plus_real + 0j, 0.5 * sigma + 0.5j * root)
    minus = np.where(real_case, minus_real + 0j, 0.5 * sigma - 0.5j * root)
    return minus, plus


def exact_eigenvalues(p: ModelParams, r: ArrayLike) -> EigenQuadruple:
    """Closed-form eigenvalues of B from the two block quadratics."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterError("Radial frequency must be non-negative")
    sigma = np.asarray(dissipation_sigma(p, r))
    b_minus, b_plus = block_roots(sigma, p.b, r)
    a_minus, a_plus = block_roots(sigma, p.a, r)
    return EigenQuadruple(
        lambda1=_as_output(b_minus),
        lambda2=_as_output(a_minus),
        lambda3=_as_output(b_plus),
        lambda4=_as_output(a_plus),
    )


def principal_eigenvalues(p: ModelParams, r: ArrayLike, regime: str) -> EigenQuadruple:
    """
    Principal (asymptotic) eigenvalue terms for small or large frequencies.

    For large frequencies the roles of rho and theta are exchanged.
    """
    if regime not in FREQUENCY_REGIMES:
        raise ParameterError(f"regime must be one of {FREQUENCY_REGIMES}, got {regime!r}")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("Principal eigenvalues need positive frequencies")

    dominant, other = (p.rho, p.theta) if regime == "small" else (p.theta, p.rho)
    slow = radial_power(r, 2.0 - 2.0 * dominant)
    damping = radial_power(r, 2.0 * dominant)
    other_damping = radial_power(r, 2.0 * other)
    # the other damping survives in the principal part only on its own side
    keeps_other = (regime == "small" and p.regime == "below") or (
        regime == "large" and p.regime == "above"
    )

    values = []
    for speed in p.speeds:
        values.append(speed**2 * slow)
    for speed in p.speeds:
        if p.regime == "equal":
            values.append(damping + (1.0 - speed**2) * slow)
        elif keeps_other:
            values.append(damping + other_damping - speed**2 * slow)
        else:
            values.append(damping - speed**2 * slow)

    return EigenQuadruple(*(_as_output(v.astype(complex)) for v in values))


def predicted_remainder_exponent(p: ModelParams, regime: str, branch: Optional[str] = None) -> float:
    """
    Exponent of the O(r^e) remainder in the principal eigenvalue terms.

    Without a branch this is the common exponent of the expansion. Below the
    threshold at large r the plus branches drop the r^{2 rho} damping term,
    so their remainder is O(r^{max(3 - 4 theta, 2 rho)}) instead.
    """
    if branch is not None and branch not in BRANCHES:
        raise ParameterError(f"branch must be one of {BRANCHES}, got {branch!r}")
    if regime == "large" and p.regime == "below" and branch is not None and branch.endswith("plus"):
        return max(3.0 - 4.0 * p.theta, 2.0 * p.rho)
    if regime == "small":
        return {
            "below": 1.0 + 2.0 * p.theta - 2.0 * p.rho,
            "equal": 3.0 - 4.0 * p.rho,
            "above": min(3.0 - 4.0 * p.rho, 2.0 * p.theta),
        }[p.regime]
    if regime == "large":
        return {
            "below": min(3.0 - 4.0 * p.theta, 2.0 * p.rho),
            "equal": 3.0 - 4.0 * p.theta,
            "above": 1.0 + 2.0 * p.rho - 2.0 * p.theta,
        }[p.regime]
    raise ParameterError(f"regime must be one of {FREQUENCY_REGIMES}, got {regime!r}")


def structure_matrices(p: ModelParams, r: float) -> StructureMatrices:
    """All matrices of the diagonalization at radial frequency r."""
    if r < 0:
        raise ParameterError("Radial frequency must be non-negative")
    b0, b1 = coefficient_matrices(p)
    t1 = np.array(
        [
            [-1.0, 0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
        ]
    )
    pattern = _N_PATTERN * np.array([p.b, p.a, p.b, p.a])[:, None]
    n2 = 1j * float(radial_power(r, 1.0 - 2.0 * p.rho)) * pattern
    if r == 0:
        n3 = np.zeros((4, 4), dtype=complex)
    else:
        n3 = 1j * r ** (1.0 - 2.0 * p.theta) * pattern

    return StructureMatrices(
        B0=b0,
        B1=b1,
        T1=t1,
        M1=np.diag([p.b**2, p.a**2, -p.b**2, -p.a**2]),
        M2=np.diag([0.0, 0.0, 1.0, 1.0]),
        N2=n2,
        N3=n3,
    )


def quartic_coefficients(p: ModelParams, r: float) -> NDArray[np.float64]:
    """Characteristic polynomial det(B - lambda I) as printed, highest power first."""
    sigma = float(dissipation_sigma(p, r))
    speeds = (p.a**2 + p.b**2) * r**2
    return np.array(
        [
            1.0,
            -2.0 * sigma,
            sigma**2 + speeds,
            -speeds * sigma,
            p.a**2 * p.b**2 * r**4,
        ]
    )


def factored_quartic_coefficients(p: ModelParams, r: float) -> NDArray[np.float64]:
    """Coefficients of (l^2 - sigma l + b^2 r^2)(l^2 - sigma l + a^2 r^2)."""
    sigma = float(dissipation_sigma(p, r))
    return np.polymul([1.0, -sigma, p.b**2 * r**2], [1.0, -sigma, p.a**2 * r**2])


def characteristic_residual(p: ModelParams, r: float, eigen: EigenQuadruple) -> float:
    """Largest |det(B - lambda I)| over the branches, scaled by the coefficient size."""
    coefficients = quartic_coefficients(p, r)
    values = eigen.as_array().ravel()
    scale = np.polyval(np.abs(coefficients), np.abs(values))
    residual = np.abs(np.polyval(coefficients, values))
    return float(np.max(np.divide(residual, scale, out=np.zeros_like(residual), where=scale > 0)))
