"""One-dimensional wavefunctions on uniform grids.

Grids are periodic and FFT-compatible; all states are required to have their
tails well contained inside the grid, so the uniform Riemann sum is
spectrally accurate and FFT-based shifts do not wrap anything visible.
Units: hbar = 1, everything dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvariantViolation

NORM_TOL = 1e-10
TAIL_TOL = 1e-8
# Minimum distance, in units of the density standard deviation, between a
# Gaussian's mean and either grid edge.
GAUSSIAN_MARGIN = 8.0

POSITION = "position"
MOMENTUM = "momentum"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic discretization x_j = x_min + j*dx, j = 0..n-1."""

    n: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if self.n < 8:
            raise ConfigurationError(f"grid needs n >= 8, got n={self.n}")
        if not self.x_max > self.x_min:
            raise ConfigurationError(
                f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]"
            )

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @classmethod
    def symmetric(cls, n: int, half_width: float) -> "Grid":
        return cls(n, -half_width, half_width)

    def dual(self) -> "Grid":
        """FFT-dual grid: spacing 2*pi/(n*dx), centered at 0."""
        dp = 2.0 * math.pi / (self.n * self.dx)
        half = self.n // 2
        return Grid(self.n, -half * dp, (self.n - half) * dp)


@dataclass(frozen=True)
class GaussianSpec:
    """Gaussian amplitude exp(-(x-mean)^2/(4 sigma^2)); sigma is the standard
    deviation of the probability density |psi|^2."""

    mean: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")

    def amplitude(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (2.0 * math.pi * self.sigma**2) ** -0.25 * np.exp(
            -((x - self.mean) ** 2) / (4.0 * self.sigma**2)
        )

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - self.mean) ** 2) / (2.0 * self.sigma**2)) / (
            math.sqrt(2.0 * math.pi) * self.sigma
        )

    def momentum_amplitude(self, p) -> np.ndarray:
        """Fourier transform (convention psi~(p) = (2pi)^-1/2 int psi e^{-ipx} dx)."""
        p = np.asarray(p, dtype=float)
        mag = (2.0 * self.sigma**2 / math.pi) ** 0.25 * np.exp(
            -(self.sigma**2) * p**2
        )
        if self.mean == 0.0:
            return mag.astype(complex)
        return mag * np.exp(-1j * p * self.mean)

    @property
    def momentum_sigma(self) -> float:
        """Density standard deviation of |psi~|^2."""
        return 0.5 / self.sigma

    def overlap_factor(self, s) -> np.ndarray:
        """Autocorrelation D(s) = int psi(y) psi*(y+s) dy, in closed form."""
        s = np.asarray(s, dtype=float)
        return np.exp(-(s**2) / (8.0 * self.sigma**2))

    def check_containment(self, grid: Grid, label: str = "wavepacket") -> None:
        lo = self.mean - grid.x_min
        hi = grid.x_max - self.mean
        need = GAUSSIAN_MARGIN * self.sigma
        if lo < need or hi < need:
            side = "lower" if lo < need else "upper"
            margin = min(lo, hi)
            raise ConfigurationError(
                f"{label}: {side} grid margin {margin:.3g} < {need:.3g} "
                f"(= {GAUSSIAN_MARGIN} sigma) required for tail containment"
            )


@dataclass(frozen=True)
class WavePacket:
    """Normalized complex amplitudes on a Grid."""

    grid: Grid
    amps: np.ndarray
    basis: str = POSITION

    def __post_init__(self):
        if self.basis not in (POSITION, MOMENTUM):
            raise ConfigurationError(f"unknown basis {self.basis!r}")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.grid.n,):
            raise ConfigurationError("amplitude array does not match grid size")
        object.__setattr__(self, "amps", amps)
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantViolation(f"wavepacket norm {norm} differs from 1")
        peak = np.abs(amps).max()
        edge = max(abs(amps[0]), abs(amps[-1]))
        if edge >= TAIL_TOL * peak:
            raise InvariantViolation(
                f"endpoint amplitude {edge:.3g} exceeds {TAIL_TOL} of peak {peak:.3g}; "
                "enlarge the grid"
            )

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.dx)

    @classmethod
    def from_samples(cls, grid: Grid, amps, basis: str = POSITION) -> "WavePacket":
        amps = np.asarray(amps, dtype=complex)
        nrm = math.sqrt(float(np.sum(np.abs(amps) ** 2) * grid.dx))
        if nrm == 0.0:
            raise ConfigurationError("cannot normalize identically zero amplitudes")
        return cls(grid, amps / nrm, basis)


@dataclass(frozen=True)
class DecoherenceFactor:
    """Sampled overlap D(s) = int E(y) E*(y+s) dy on a shift grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", values)
        mags = np.abs(values)
        if mags.max() > 1.0 + 1e-10:
            raise InvariantViolation(f"|D| exceeds 1: max {mags.max()}")
        izero = int(np.argmin(np.abs(self.grid.points)))
        if abs(values[izero] - 1.0) > 1e-10:
            raise InvariantViolation(f"D(0) = {values[izero]} differs from 1")
        # Hermitian symmetry D(-s) = D*(s) on the centered part of the grid.
        s = self.grid.points
        for r in range(1, min(izero, self.grid.n - izero)):
            if abs(values[izero + r] - np.conj(values[izero - r])) > 1e-10:
                raise InvariantViolation(
                    f"D({s[izero + r]}) breaks Hermitian symmetry"
                )

    def at_zero_index(self) -> int:
        return int(np.argmin(np.abs(self.grid.points)))


def sample_gaussian(spec: GaussianSpec, grid: Grid) -> WavePacket:
    spec.check_containment(grid, "sample_gaussian")
    return WavePacket.from_samples(grid, spec.amplitude(grid.points))


def dft_vector(grid: Grid, amps: np.ndarray) -> np.ndarray:
    """f~(p_k) = dx/sqrt(2pi) * sum_j f_j e^{-i p_k x_j} on the dual grid.

    Uses e^{-i p_k x_j} = e^{-i p_k x_min} e^{-i p_min j dx} w^{jk}.
    """
    dual = grid.dual()
    offsets = grid.points - grid.x_min
    inner = np.exp(-1j * dual.x_min * offsets)
    pre = np.exp(-1j * dual.points * grid.x_min)
    return pre * np.fft.fft(amps * inner) * grid.dx / math.sqrt(2.0 * math.pi)


def idft_vector(grid: Grid, amps: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft_vector`; `grid` is the momentum grid of `amps`.

    f_j = dp/sqrt(2pi) * sum_k f~_k e^{+i p_k x_j} on the dual (position) grid.
    """
    dual = grid.dual()  # position grid
    inner = np.exp(1j * (grid.points - grid.x_min) * dual.x_min)
    outer = np.exp(1j * grid.x_min * dual.points)
    out = np.fft.ifft(amps * inner) * grid.n
    return outer * out * grid.dx / math.sqrt(2.0 * math.pi)


def fourier_transform(wp: WavePacket) -> WavePacket:
    """Unitary transform to the conjugate basis on the FFT-dual grid.

    Applying it twice returns the original wavepacket.
    """
    if wp.basis == POSITION:
        return WavePacket(wp.grid.dual(), dft_vector(wp.grid, wp.amps), MOMENTUM)
    return WavePacket(wp.grid.dual(), idft_vector(wp.grid, wp.amps), POSITION)


def phase_shift(grid: Grid, amps: np.ndarray, delta: float) -> np.ndarray:
    """Band-limited evaluation of f(x - delta) on the same grid (periodic)."""
    k = 2.0 * math.pi * np.fft.fftfreq(grid.n, d=grid.dx)
    return np.fft.ifft(np.fft.fft(amps) * np.exp(-1j * k * delta))


def autocorrelation(wp: WavePacket) -> DecoherenceFactor:
    """D(s) on the centered shift grid, via the FFT correlation theorem."""
    grid = wp.grid
    spec = np.abs(np.fft.fft(wp.amps)) ** 2
    c = np.fft.ifft(spec)  # c[r] = sum_j E*_j E_{j+r}
    d = np.conj(c) * grid.dx  # D(r dx) = dx * sum_j E_j E*_{j+r}
    half = grid.n // 2
    values = np.roll(d, half)
    shift_grid = Grid(grid.n, -half * grid.dx, (grid.n - half) * grid.dx)
    # Exact unit value at s=0 (quadrature norm is 1 by construction).
    izero = half
    values = values / values[izero].real
    return DecoherenceFactor(shift_grid, values)
