"""
Discrete Fourier grid, fields, norms and initial-data generators.

Convention: f_hat(xi) = int e^{-i x.xi} f(x) dx, approximated on a square
periodic box of side L sampled at x_j = -L/2 + j L/n. The lattice transform
is dx^2 * phase * FFT, and its inverse is exact. Plancherel carries the
factor (2 pi)^{-2}.

Field data is stored with the component axis first: shape (components, n, n).
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from src.errors import GridError, ParameterError


logger = logging.getLogger(__name__)

DOMAINS = ("physical", "spectral")
DATA_KINDS = ("gaussian", "gaussian-derivative", "ring")
DATA_TARGETS = ("u0", "u1", "U0")

# Relative amplitude below which a profile counts as resolved
RESOLUTION_FLOOR = 1e-12
CSV_MAX_POINTS = 128

SpectralProfile = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.complex128]]


@dataclass(frozen=True)
class GridSpec:
    """Square periodic box of side box_length with n_points nodes per axis."""

    n_points: int = 512
    box_length: float = 200.0

    def __post_init__(self):
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise ParameterError(f"n_points must be a power of two >= 8, got {n}")
        if not self.box_length > 0:
            raise ParameterError(f"box_length must be positive, got {self.box_length}")

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_points

    @property
    def frequency_spacing(self) -> float:
        return 2.0 * np.pi / self.box_length

    @property
    def nyquist(self) -> float:
        """Largest lattice frequency magnitude per axis, pi n / L."""
        return np.pi * self.n_points / self.box_length

    def axis_coordinates(self) -> NDArray[np.float64]:
        return -0.5 * self.box_length + self.spacing * np.arange(self.n_points)

    def axis_frequencies(self) -> NDArray[np.float64]:
        """2 pi k / L for k in [-n/2, n/2), in FFT order."""
        return 2.0 * np.pi * fft.fftfreq(self.n_points, d=self.spacing)

    def coordinates(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        axis = self.axis_coordinates()
        return np.meshgrid(axis, axis, indexing="ij")

    def frequencies(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        axis = self.axis_frequencies()
        return np.meshgrid(axis, axis, indexing="ij")

    def radial_frequencies(self) -> NDArray[np.float64]:
        xi1, xi2 = self.frequencies()
        return np.hypot(xi1, xi2)

    def to_dict(self):
        """Grid as a JSON-ready dict."""
        return {"n": self.n_points, "L": self.box_length}


@dataclass(frozen=True, eq=False)
class FourierField:
    """
    Complex field values on a grid, physical or spectral.

    When a closed-form spectral profile is attached it is checked against
    the stored data on construction (after a forward transform for physical
    fields). The stored array is read-only.
    """

    grid: GridSpec
    data: NDArray[np.complex128]
    domain: str = "spectral"
    profile: Optional[SpectralProfile] = None
    profile_tolerance: float = 1e-10

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ParameterError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        data = np.array(self.data, dtype=complex)
        n = self.grid.n_points
        if data.ndim != 3 or data.shape[0] not in (2, 4) or data.shape[1:] != (n, n):
            raise GridError(
                f"Field data must have shape (2 or 4, {n}, {n}), got {data.shape}"
            )
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        if self.profile is not None:
            self._check_profile()

    @property
    def components(self) -> int:
        return self.data.shape[0]

    def spectrum(self, workers: int = 1) -> NDArray[np.complex128]:
        """Spectral values, transforming first when the field is physical."""
        if self.domain == "spectral":
            return self.data
        return _forward(self.grid, self.data, workers)

    def profile_values(self) -> NDArray[np.complex128]:
        if self.profile is None:
            raise GridError("Field carries no closed-form profile")
        xi1, xi2 = self.grid.frequencies()
        return np.broadcast_to(self.profile(xi1, xi2), self.data.shape)

    def _check_profile(self) -> None:
        expected = self.profile_values()
        actual = self.spectrum()
        scale = max(float(np.max(np.abs(expected))), 1e-300)
        error = float(np.max(np.abs(actual - expected))) / scale
        if error > self.profile_tolerance:
            raise GridError(
                f"Attached profile differs from lattice data by {error:.3e} "
                f"(tolerance {self.profile_tolerance:.0e})"
            )

    def replace_data(self, data: NDArray[np.complex128], domain: Optional[str] = None, profile=None):
        """New field on the same grid; the profile is dropped unless given."""
        return FourierField(
            grid=self.grid,
            data=data,
            domain=domain or self.domain,
            profile=profile,
            profile_tolerance=self.profile_tolerance,
        )


@dataclass(frozen=True)
class InitialDataSpec:
    """Closed-form initial data: profile kind, width, amplitude and placement."""

    kind: str = "gaussian"
    width: float = 1.0
    amplitude: float = 1.0
    target: str = "u1"
    polarization: Tuple[float, float, float, float] = (1.0, 1.0, 0.0, 0.0)

    def __post_init__(self):
        errors = []
        if self.kind not in DATA_KINDS:
            errors.append(f"kind must be one of {DATA_KINDS}")
        if not self.width > 0:
            errors.append("width must be positive")
        if self.target not in DATA_TARGETS:
            errors.append(f"target must be one of {DATA_TARGETS}")
        if len(self.polarization) != 4:
            errors.append("polarization must have 4 entries")
        if errors:
            raise ParameterError("; ".join(errors))
        object.__setattr__(self, "polarization", tuple(float(v) for v in self.polarization))

    @property
    def zero_mean(self) -> bool:
        return self.kind != "gaussian"

    def to_dict(self):
        """Data specification as a JSON-ready dict."""
        return {
            "kind": self.kind,
            "width": self.width,
            "amplitude": self.amplitude,
            "target": self.target,
            "polarization": list(self.polarization),
        }


@dataclass(frozen=True)
class InitialData:
    """Generated data; u0/u1 for displacement targets, U0 for the first-order target."""

    spec: InitialDataSpec
    u0: Optional[FourierField] = None
    u1: Optional[FourierField] = None
    U0: Optional[FourierField] = None


class PhysicalNorms(NamedTuple):
    lm: float
    l1gamma: float
    integral: NDArray[np.complex128]


class MomentCheck(NamedTuple):
    C_gamma: float
    holds: bool
    analytic_constant: float


def _phase(grid: GridSpec) -> NDArray[np.complex128]:
    """e^{-i x_0 . xi} for the box corner x_0 = (-L/2, -L/2)."""
    x0 = -0.5 * grid.box_length
    axis = np.exp(-1j * x0 * grid.axis_frequencies())
    return np.outer(axis, axis)


def _forward(grid: GridSpec, data: NDArray, workers: int) -> NDArray[np.complex128]:
    cell = grid.spacing**2
    return cell * _phase(grid) * fft.fft2(data, axes=(-2, -1), workers=workers)


def _inverse(grid: GridSpec, data: NDArray, workers: int) -> NDArray[np.complex128]:
    cell = grid.spacing**2
    return fft.ifft2(data * np.conj(_phase(grid)) / cell, axes=(-2, -1), workers=workers)


def transform(f: FourierField, direction: str = "forward", workers: int = 1) -> FourierField:
    """
    Lattice Fourier transform between the physical and spectral domains.

    Raises:
        GridError: If the field is not in the domain the direction starts from
    """
    if direction == "forward":
        if f.domain != "physical":
            raise GridError("Forward transform needs a physical field")
        data, domain = _forward(f.grid, f.data, workers), "spectral"
    elif direction == "inverse":
        if f.domain != "spectral":
            raise GridError("Inverse transform needs a spectral field")
        data, domain = _inverse(f.grid, f.data, workers), "physical"
    else:
        raise ParameterError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return f.replace_data(data, domain=domain, profile=f.profile)


def sobolev_norm(
    f: FourierField,
    s: float,
    weight: Optional[Callable[[NDArray[np.float64]], NDArray[np.float64]]] = None,
) -> float:
    """
    Homogeneous H^s norm of a spectral field, optionally localized by a radial weight.

    The zero node contributes nothing when s > 0.
    """
    if f.domain != "spectral":
        raise GridError("sobolev_norm needs a spectral field")
    if s < 0:
        raise ParameterError(f"Sobolev order must be non-negative, got {s}")

    r = f.grid.radial_frequencies()
    multiplier = np.power(r, 2.0 * s)
    if weight is not None:
        multiplier = multiplier * np.asarray(weight(r)) ** 2
    density = np.sum(np.abs(f.data) ** 2, axis=0)
    total = np.sum(multiplier * density) * f.grid.frequency_spacing**2
    return float(np.sqrt(total / (2.0 * np.pi) ** 2))


def physical_norms(f: FourierField, m: float, gamma: float) -> PhysicalNorms:
    """Lattice quadrature of the L^m norm, the L^{1,gamma} norm and the integral."""
    if f.domain != "physical":
        raise GridError("physical_norms needs a physical field")
    if not 1.0 <= m <= 2.0:
        raise ParameterError(f"m must lie in [1, 2], got {m}")
    if not 0.0 < gamma <= 1.0:
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")

    cell = f.grid.spacing**2
    x1, x2 = f.grid.coordinates()
    magnitude = np.sqrt(np.sum(np.abs(f.data) ** 2, axis=0))
    lm = float(np.sum(magnitude**m) * cell) ** (1.0 / m)
    l1gamma = float(np.sum((1.0 + np.hypot(x1, x2)) ** gamma * magnitude) * cell)
    integral = np.sum(f.data, axis=(-2, -1)) * cell
    return PhysicalNorms(lm=lm, l1gamma=l1gamma, integral=integral)


def moment_bound_check(f: FourierField, gamma: float) -> MomentCheck:
    """
    Smallest C with |f_hat(xi)| <= C |xi|^gamma ||f||_{1,gamma} + |int f| on the lattice.

    The lattice transform obeys the same inequality as the continuous one,
    so C never exceeds 2^{1-gamma}.
    """
    norms = physical_norms(f, 1.0, gamma)
    analytic = 2.0 ** (1.0 - gamma)
    if norms.l1gamma == 0:
        return MomentCheck(C_gamma=0.0, holds=True, analytic_constant=analytic)

    spectrum = f.spectrum()
    r = f.grid.radial_frequencies()
    nonzero = r > 0
    excess = np.sqrt(np.sum(np.abs(spectrum) ** 2, axis=0)) - np.linalg.norm(norms.integral)
    ratio = excess[nonzero] / (r[nonzero] ** gamma * norms.l1gamma)
    constant = max(float(np.max(ratio)), 0.0)
    holds = bool(np.isfinite(constant) and constant <= analytic * (1.0 + 1e-9))
    logger.debug(f"Moment constant {constant:.6g} against 2^(1-gamma)={analytic:.6g}")
    return MomentCheck(C_gamma=constant, holds=holds, analytic_constant=analytic)


def scalar_profile(spec: InitialDataSpec) -> SpectralProfile:
    """Closed-form Fourier transform of the scalar data profile."""
    w, amplitude = spec.width, spec.amplitude

    def gaussian(xi1, xi2):
        return amplitude * 2.0 * np.pi * w**2 * np.exp(-0.5 * w**2 * (xi1**2 + xi2**2))

    if spec.kind == "gaussian":
        return lambda xi1, xi2: gaussian(xi1, xi2) + 0j
    if spec.kind == "gaussian-derivative":
        return lambda xi1, xi2: 1j * xi1 * gaussian(xi1, xi2)

    center, half_width = 1.0 / w, 0.5 / w

    def ring(xi1, xi2):
        u = (np.hypot(xi1, xi2) - center) / half_width
        inside = np.abs(u) < 1.0
        safe = np.where(inside, u, 0.0)
        return amplitude * np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0) + 0j

    return ring


def spectral_cutoff(spec: InitialDataSpec) -> float:
    """Radius beyond which the data spectrum is negligible (below e^{-46} of its peak)."""
    if spec.kind == "ring":
        return 1.5 / spec.width
    return np.sqrt(2.0 * 46.0) / spec.width


def _vector_profile(scalar: SpectralProfile, direction: Tuple[float, ...]) -> SpectralProfile:
    weights = np.asarray(direction, dtype=float)

    def profile(xi1, xi2):
        values = np.asarray(scalar(xi1, xi2))
        return weights.reshape((-1,) + (1,) * values.ndim) * values

    return profile


def _physical_scalar(spec: InitialDataSpec, grid: GridSpec) -> NDArray[np.complex128]:
    x1, x2 = grid.coordinates()
    w = spec.width
    envelope = spec.amplitude * np.exp(-(x1**2 + x2**2) / (2.0 * w**2))
    if spec.kind == "gaussian":
        return envelope + 0j
    if spec.kind == "gaussian-derivative":
        return -x1 / w**2 * envelope + 0j
    xi1, xi2 = grid.frequencies()
    spectrum = scalar_profile(spec)(xi1, xi2)
    return _inverse(grid, spectrum, workers=1)


def check_resolution(spec: InitialDataSpec, grid: GridSpec) -> None:
    """
    Reject widths the grid cannot represent.

    Raises:
        GridError: If the spectrum is not resolved below Nyquist or the
            physical profile does not decay inside the box
    """
    w = spec.width
    if spec.kind == "ring":
        if 1.5 / w >= grid.nyquist:
            raise GridError(f"width {w} too small for the grid: annulus reaches Nyquist {grid.nyquist:.4g}")
        if 0.5 / w < 4.0 * grid.frequency_spacing:
            raise GridError(f"width {w} too large for the box: annulus spans fewer than 4 lattice spacings")
        return

    # relative amplitudes at the Nyquist frequency and the box edge
    nyquist_level = np.exp(-0.5 * (w * grid.nyquist) ** 2)
    edge = 0.5 * grid.box_length
    edge_level = np.exp(-0.5 * (edge / w) ** 2)
    if spec.kind == "gaussian-derivative":
        nyquist_level *= max(1.0, w * grid.nyquist)
        edge_level *= max(1.0, edge / w)
    if nyquist_level > RESOLUTION_FLOOR:
        raise GridError(f"width {w} too small for the grid: spectrum {nyquist_level:.2e} at Nyquist")
    if edge_level > RESOLUTION_FLOOR:
        raise GridError(f"width {w} too large for the box: profile {edge_level:.2e} at the edge")


def make_initial_data(spec: InitialDataSpec, grid: GridSpec) -> InitialData:
    """Physical fields for the data spec with their closed-form spectra attached."""
    check_resolution(spec, grid)
    logger.info(f"Generating {spec.kind} data (width={spec.width}, target={spec.target}) on n={grid.n_points}")

    scalar = scalar_profile(spec)
    values = _physical_scalar(spec, grid)
    tolerance = 1e-8

    if spec.target == "U0":
        direction = spec.polarization
        data = np.asarray(direction)[:, None, None] * values[None]
        U0 = FourierField(grid, data, "physical", _vector_profile(scalar, direction), tolerance)
        return InitialData(spec=spec, U0=U0)

    active = FourierField(
        grid, np.stack([values, np.zeros_like(values)]), "physical",
        _vector_profile(scalar, (1.0, 0.0)), tolerance,
    )
    quiet = FourierField(grid, np.zeros((2,) + values.shape, dtype=complex), "physical")
    if spec.target == "u0":
        return InitialData(spec=spec, u0=active, u1=quiet)
    return InitialData(spec=spec, u0=quiet, u1=active)


def write_binary(f: FourierField, path: Path) -> Path:
    """Header (n, L, components) as little-endian float64, then complex128 data row-major."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([f.grid.n_points, f.grid.box_length, f.components], dtype="<f8")
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(f.data, dtype="<c16").tobytes())
    logger.info(f"Wrote {f.domain} snapshot to {path}")
    return path


def read_binary(path: Path, domain: str = "spectral") -> FourierField:
    raw = Path(path).read_bytes()
    header = np.frombuffer(raw[:24], dtype="<f8")
    n, box_length, components = int(header[0]), float(header[1]), int(header[2])
    data = np.frombuffer(raw[24:], dtype="<c16")
    if data.size != components * n * n:
        raise GridError(f"Snapshot {path} holds {data.size} values, expected {components * n * n}")
    return FourierField(GridSpec(n, box_length), data.reshape(components, n, n), domain)


def write_csv(f: FourierField, path: Path) -> Path:
    """One row per node: indices, coordinates, then re/im per component."""
    n = f.grid.n_points
    if n > CSV_MAX_POINTS:
        raise GridError(f"CSV export is limited to n <= {CSV_MAX_POINTS}, got {n}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if f.domain == "physical":
        c1, c2 = f.grid.coordinates()
        axes = ["x1", "x2"]
    else:
        c1, c2 = f.grid.frequencies()
        axes = ["xi1", "xi2"]
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    columns = [i.ravel(), j.ravel(), c1.ravel(), c2.ravel()]
    header = ["i", "j"] + axes
    for k in range(f.components):
        columns += [f.data[k].real.ravel(), f.data[k].imag.ravel()]
        header += [f"re_{k + 1}", f"im_{k + 1}"]

    np.savetxt(
        path, np.column_stack(columns), fmt="%.17g", delimiter=",",
        header=",".join(header), comments="", newline="\r\n",
    )
    return path
