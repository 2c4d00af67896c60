"""Reduced density matrices for the two-pointer conjugate-measurement model.

The interaction couples the system position to environment 1 and the system
momentum to environment 2. For the interaction-dominated regime the reduced
kernel factorizes exactly:

  position basis:
    rho(X, Xbar; t) = D1((X - Xbar) t)
        * int dy2 |E2(y2)|^2 psi(X - y2 t) psi*(Xbar - y2 t)
  momentum basis:
    rho(P, Pbar; t) = D2~(-(P - Pbar) t)
        * int dp1 |E1~(p1)|^2 psi~(P + p1 t) psi~*(Pbar + p1 t)

where D is the environment overlap (autocorrelation) and ~ denotes the
momentum representation. Matrix elements carry the grid measure, so the
trace is a plain diagonal sum; every kernel is renormalized to unit trace
and the pre-normalization trace is kept for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    ConfigurationError,
    InvariantViolation,
    OracleSizeError,
    SupportOverflowError,
)
from .wavepacket import MOMENTUM, POSITION, GaussianSpec, Grid

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
PSD_TOL = 1e-8
ORACLE_AXIS_CAP = 64
# Tail-containment margin, in density standard deviations, used by the grid
# sizing rule.
SIZING_MARGIN = 8.0


@dataclass(frozen=True)
class ModelParams:
    """System + two environment Gaussians, evolution time, and mass.

    mass=inf selects the interaction-dominated regime (no kinetic phases);
    the environments are static pointers with no free dynamics.
    """

    system: GaussianSpec
    env1: GaussianSpec
    env2: GaussianSpec
    t: float
    mass: float = math.inf

    def __post_init__(self):
        if self.t < 0:
            raise ConfigurationError(f"t must be nonnegative, got {self.t}")
        if not self.mass > 0:
            raise ConfigurationError(f"mass must be positive or inf, got {self.mass}")


@dataclass(frozen=True)
class DensityMatrix:
    grid: Grid
    basis: str
    elems: np.ndarray
    pre_trace: float = 1.0

    def trace(self) -> float:
        return float(np.real(np.trace(self.elems)))

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.elems - self.elems.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.elems)[0])

    def purity(self) -> float:
        return float(np.sum(np.abs(self.elems) ** 2))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.elems)).copy()

    def assert_valid(self, check_psd: bool = True,
                     trace_tol: float = TRACE_TOL,
                     psd_tol: float = PSD_TOL) -> None:
        h = self.hermiticity_defect()
        if h > HERMITICITY_TOL:
            raise InvariantViolation(f"Hermiticity defect {h:.3g} > {HERMITICITY_TOL}")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise InvariantViolation(f"trace {tr} differs from 1 beyond {trace_tol}")
        if check_psd:
            lam = self.min_eigenvalue()
            if lam < -psd_tol:
                raise InvariantViolation(f"min eigenvalue {lam:.3g} < -{psd_tol}")


@dataclass(frozen=True)
class DiagonalDistribution:
    grid: Grid
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.min() < -1e-12:
            raise InvariantViolation(f"negative probability {probs.min()}")
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise InvariantViolation(f"probabilities sum to {total}")
        object.__setattr__(self, "probs", probs)

    def density(self) -> np.ndarray:
        return self.probs / self.grid.dx

    def variance(self) -> float:
        x = self.grid.points
        mean = float(np.sum(self.probs * x))
        return float(np.sum(self.probs * (x - mean) ** 2))


# ---------------------------------------------------------------------------
# grid sizing

def required_position_half_width(params: ModelParams,
                                 margin: float = SIZING_MARGIN) -> float:
    """Half-width needed to contain psi broadened by the y2*t drift."""
    sys, e2 = params.system, params.env2
    return (abs(sys.mean) + margin * sys.sigma
            + params.t * (abs(e2.mean) + margin * e2.sigma))


def required_momentum_half_width(params: ModelParams,
                                 margin: float = SIZING_MARGIN) -> float:
    """Half-width needed to contain psi~ broadened by the p1*t drift."""
    return (margin * params.system.momentum_sigma
            + params.t * margin * params.env1.momentum_sigma)


def _check_support(grid: Grid, required: float, what: str) -> None:
    hw = min(-grid.x_min, grid.x_max)
    if hw < required:
        raise SupportOverflowError(
            f"{what}: grid half-width {hw:.4g} < required {required:.4g}; "
            "enlarge the grid instead of wrapping around"
        )


def sized_grid(n: int, params: ModelParams, basis: str,
               minimum_half_width: float = 0.0) -> Grid:
    """Symmetric grid satisfying the sizing rule at params.t."""
    if basis == POSITION:
        hw = required_position_half_width(params)
    else:
        hw = required_momentum_half_width(params)
    return Grid.symmetric(n, max(hw, minimum_half_width))


# ---------------------------------------------------------------------------
# environment quadrature

def _env_nodes(env: GaussianSpec, t: float, narrow_scale: float,
               oversample: float, extent: float = 8.5):
    """Uniform quadrature nodes and density weights over an environment.

    The integrand is the env density times a product of system amplitudes
    whose width in the node variable is narrow_scale/t; the spacing resolves
    whichever scale is narrower.
    """
    if t > 0:
        width = 1.0 / math.sqrt(0.5 / env.sigma**2 + t**2 * 0.5 / narrow_scale**2)
    else:
        width = math.sqrt(2.0) * env.sigma
    h = min(width, env.sigma) / oversample
    half = extent * env.sigma
    m = max(int(math.ceil(2.0 * half / h)), 64)
    nodes = env.mean + np.linspace(-half, half, m)
    dy = nodes[1] - nodes[0]
    return nodes, env.density(nodes) * dy


def _finalize(grid: Grid, basis: str, raw: np.ndarray) -> DensityMatrix:
    elems = 0.5 * (raw + raw.conj().T)
    pre = float(np.real(np.trace(elems)))
    if pre <= 0:
        raise InvariantViolation(f"pre-normalization trace {pre} not positive")
    return DensityMatrix(grid, basis, elems / pre, pre_trace=pre)


# ---------------------------------------------------------------------------
# factorized kernels

def position_kernel(params: ModelParams, grid: Grid,
                    env_oversample: float = 4.0,
                    backend: str | None = None,
                    check_support: bool = True) -> DensityMatrix:
    """Exact factorized position-basis kernel (interaction-dominated).

    check_support=False skips the sizing-rule guard; only meant for
    comparisons on deliberately small oracle grids.
    """
    if math.isfinite(params.mass):
        raise ConfigurationError(
            "position_kernel assumes infinite mass; "
            "use free_particle_momentum_kernel for finite mass"
        )
    if check_support:
        _check_support(grid, required_position_half_width(params), "position_kernel")
    x = grid.points
    t = params.t
    nodes, weights = _env_nodes(params.env2, t, params.system.sigma, env_oversample)
    vt = params.system.amplitude(x[:, None] - nodes[None, :] * t).astype(complex)
    r = np.arange(-(grid.n - 1), grid.n)
    d = params.env1.overlap_factor(-r * grid.dx * t).astype(complex)
    raw = kernels.assemble(vt, weights, d, backend=backend) * grid.dx
    return _finalize(grid, POSITION, raw)


def _momentum_vt(params: ModelParams, p: np.ndarray):
    t = params.t
    eps1 = GaussianSpec(0.0, params.env1.momentum_sigma)
    nodes, weights = _env_nodes(eps1, t, params.system.momentum_sigma, 4.0)
    vt = params.system.momentum_amplitude(p[:, None] + nodes[None, :] * t)
    return np.ascontiguousarray(vt, dtype=complex), weights, nodes


def momentum_kernel(params: ModelParams, grid: Grid,
                    backend: str | None = None,
                    check_support: bool = True) -> DensityMatrix:
    """Exact factorized momentum-basis kernel (interaction-dominated)."""
    if math.isfinite(params.mass):
        raise ConfigurationError(
            "momentum_kernel assumes infinite mass; "
            "use free_particle_momentum_kernel for finite mass"
        )
    if check_support:
        _check_support(grid, required_momentum_half_width(params), "momentum_kernel")
    p = grid.points
    t = params.t
    vt, weights, _ = _momentum_vt(params, p)
    eps2 = GaussianSpec(0.0, params.env2.momentum_sigma)
    r = np.arange(-(grid.n - 1), grid.n)
    d = eps2.overlap_factor(-r * grid.dx * t).astype(complex)
    raw = kernels.assemble(vt, weights, d, backend=backend) * grid.dx
    return _finalize(grid, MOMENTUM, raw)


def free_particle_momentum_kernel(params: ModelParams, grid: Grid,
                                  backend: str | None = None,
                                  check_support: bool = True) -> DensityMatrix:
    """Momentum-basis kernel including the free-particle kinetic phases
    exp(-i [p^2 t / 2m + p p1 t^2 / 2m]) carried per grid point and node."""
    if not math.isfinite(params.mass):
        raise ConfigurationError("free_particle_momentum_kernel needs finite mass")
    if check_support:
        _check_support(grid, required_momentum_half_width(params),
                       "free_particle_momentum_kernel")
    p = grid.points
    t = params.t
    vt, weights, nodes = _momentum_vt(params, p)
    phase = np.exp(
        -1j * (p[:, None] ** 2 * t / (2.0 * params.mass)
               + p[:, None] * nodes[None, :] * t**2 / (2.0 * params.mass))
    )
    vt = np.ascontiguousarray(vt * phase)
    eps2 = GaussianSpec(0.0, params.env2.momentum_sigma)
    r = np.arange(-(grid.n - 1), grid.n)
    d = eps2.overlap_factor(-r * grid.dx * t).astype(complex)
    raw = kernels.assemble(vt, weights, d, backend=backend) * grid.dx
    return _finalize(grid, MOMENTUM, raw)


# ---------------------------------------------------------------------------
# pointwise evaluation (heatmaps and cut profiles; no grid, no normalization)

def kernel_values(params: ModelParams, basis: str, a, abar) -> np.ndarray:
    """Continuum kernel values rho(a, abar; t) at arbitrary point pairs."""
    a = np.asarray(a, dtype=float)
    abar = np.asarray(abar, dtype=float)
    t = params.t
    if basis == POSITION:
        nodes, weights = _env_nodes(params.env2, t, params.system.sigma, 4.0)
        va = params.system.amplitude(a[..., None] - nodes * t)
        vb = params.system.amplitude(abar[..., None] - nodes * t)
        corr = np.sum(weights * va * np.conj(vb), axis=-1)
        return corr * params.env1.overlap_factor((a - abar) * t)
    eps1 = GaussianSpec(0.0, params.env1.momentum_sigma)
    eps2 = GaussianSpec(0.0, params.env2.momentum_sigma)
    nodes, weights = _env_nodes(eps1, t, params.system.momentum_sigma, 4.0)
    va = params.system.momentum_amplitude(a[..., None] + nodes * t)
    vb = params.system.momentum_amplitude(abar[..., None] + nodes * t)
    corr = np.sum(weights * va * np.conj(vb), axis=-1)
    return corr * eps2.overlap_factor(-(a - abar) * t)


def kernel_cut(params: ModelParams, basis: str, direction: str,
               u: np.ndarray, center: float = 0.0) -> np.ndarray:
    """Kernel values along a rotated cut through (center, center).

    direction 'anti': points (center + u/sqrt2, center - u/sqrt2);
    direction 'diag': points (center + u/sqrt2, center + u/sqrt2).
    """
    u = np.asarray(u, dtype=float)
    h = u / math.sqrt(2.0)
    if direction == "anti":
        return kernel_values(params, basis, center + h, center - h)
    if direction == "diag":
        return kernel_values(params, basis, center + h, center + h)
    raise ConfigurationError(f"unknown cut direction {direction!r}")


# ---------------------------------------------------------------------------
# long-time diagonal distributions

def long_time_diagonal(params: ModelParams, basis: str,
                       grid: Grid) -> DiagonalDistribution:
    """P(X) = int dy2 |psi(X - y2 t)|^2 |E2(y2)|^2 (and the momentum mirror)."""
    if params.t <= 0:
        raise ConfigurationError("long_time_diagonal needs t > 0")
    t = params.t
    x = grid.points
    if basis == POSITION:
        _check_support(grid, required_position_half_width(params),
                       "long_time_diagonal")
        nodes, weights = _env_nodes(params.env2, t, params.system.sigma, 4.0)
        dens = params.system.density(x[:, None] - nodes[None, :] * t)
    else:
        _check_support(grid, required_momentum_half_width(params),
                       "long_time_diagonal")
        eps1 = GaussianSpec(0.0, params.env1.momentum_sigma)
        nodes, weights = _env_nodes(eps1, t, params.system.momentum_sigma, 4.0)
        amp = params.system.momentum_amplitude(x[:, None] + nodes[None, :] * t)
        dens = np.abs(amp) ** 2
    probs = dens @ weights * grid.dx
    return DiagonalDistribution(grid, probs / probs.sum())


# ---------------------------------------------------------------------------
# discrete basis change

def _unitary_dft_apply(grid: Grid, m: np.ndarray) -> np.ndarray:
    """Apply the unitary discrete Fourier matrix F (position -> momentum)
    along axis 0: F[l,j] = sqrt(dx dp / 2pi) e^{-i p_l x_j}."""
    dual = grid.dual()
    factor = math.sqrt(grid.dx * dual.dx / (2.0 * math.pi))
    inner = np.exp(-1j * dual.x_min * (grid.points - grid.x_min))
    pre = np.exp(-1j * dual.points * grid.x_min)
    return factor * pre[:, None] * np.fft.fft(inner[:, None] * m, axis=0)


def _unitary_idft_apply(grid: Grid, m: np.ndarray) -> np.ndarray:
    """Apply F-dagger (momentum -> position) along axis 0; grid is the
    momentum grid of m's rows."""
    dual = grid.dual()
    factor = math.sqrt(grid.dx * dual.dx / (2.0 * math.pi))
    inner = np.exp(1j * (grid.points - grid.x_min) * dual.x_min)
    outer = np.exp(1j * grid.x_min * dual.points)
    return factor * outer[:, None] * np.fft.ifft(inner[:, None] * m, axis=0) * grid.n


def basis_change(rho: DensityMatrix) -> DensityMatrix:
    """Conjugate by the unitary DFT matching the wavepacket convention.

    Trace, Hermiticity, and spectrum are preserved; applying it twice
    returns the original matrix on the original grid.
    """
    grid = rho.grid
    if rho.basis == POSITION:
        b = _unitary_dft_apply(grid, rho.elems)
        c = _unitary_dft_apply(grid, b.conj().T).conj().T
        out_basis = MOMENTUM
    else:
        b = _unitary_idft_apply(grid, rho.elems)
        c = _unitary_idft_apply(grid, b.conj().T).conj().T
        out_basis = POSITION
    c = 0.5 * (c + c.conj().T)
    return DensityMatrix(grid.dual(), out_basis, c, pre_trace=rho.pre_trace)


# ---------------------------------------------------------------------------
# brute-force tripartite oracle

@dataclass(frozen=True)
class OracleGrids:
    """Axes for the tripartite oracle: the system output axis, the pointer
    axis that records the system value, and the spectator axis that drives
    the system drift."""

    system: Grid
    pointer: Grid
    spectator: Grid

    def __post_init__(self):
        for name in ("system", "pointer", "spectator"):
            g = getattr(self, name)
            if g.n > ORACLE_AXIS_CAP:
                raise OracleSizeError(
                    f"oracle {name} axis n={g.n} exceeds cap {ORACLE_AXIS_CAP}"
                )


def default_oracle_grids(params: ModelParams, basis: str, n: int = 48) -> OracleGrids:
    """Axis extents tuned so periodic wrap-around stays below the oracle's
    stated tolerance for the reference-scale Gaussian configurations."""
    t = params.t
    if basis == POSITION:
        s_sys, s_pt, s_sp = (params.system.sigma, params.env1.sigma,
                             params.env2.sigma)
        mu_sys, mu_sp = params.system.mean, params.env2.mean
    else:
        s_sys = params.system.momentum_sigma
        s_pt = params.env2.momentum_sigma
        s_sp = params.env1.momentum_sigma
        mu_sys = mu_sp = 0.0
    hw_sys = abs(mu_sys) + 5.0 * s_sys + t * (abs(mu_sp) + 5.0 * s_sp)
    hw_pt = max(9.0 * s_pt, 8.0 * s_pt + 2.0 * s_sys * t)
    hw_sp = abs(mu_sp) + 6.0 * s_sp
    return OracleGrids(
        system=Grid.symmetric(n, hw_sys),
        pointer=Grid.symmetric(n, hw_pt),
        spectator=Grid.symmetric(n, hw_sp),
    )


def _fft_shift_axis(field: np.ndarray, axis: int, grid: Grid,
                    shift: np.ndarray) -> np.ndarray:
    """Band-limited evaluation of f(q - shift) along one axis; shift may
    depend on the remaining axes (broadcast against the FFT spectrum)."""
    k = 2.0 * math.pi * np.fft.fftfreq(grid.n, d=grid.dx)
    kshape = [1, 1, 1]
    kshape[axis] = grid.n
    k = k.reshape(kshape)
    spec = np.fft.fft(field, axis=axis)
    return np.fft.ifft(spec * np.exp(-1j * k * shift), axis=axis)


def _evolved_tripartite(sys_amps, pointer_amps, spectator_amps,
                        grids: OracleGrids, t_eff: float) -> np.ndarray:
    """Exact shift map applied by FFT resampling on axes (sys, pointer, spec):
    system argument shifted by spectator*t_eff, pointer argument shifted by
    system*t_eff - spectator*t_eff^2/2."""
    a = (np.asarray(sys_amps, complex)[:, None, None]
         * np.asarray(pointer_amps, complex)[None, :, None]
         * np.asarray(spectator_amps, complex)[None, None, :])
    spec_vals = grids.spectator.points
    shift_sys = (spec_vals * t_eff)[None, None, :]
    b = _fft_shift_axis(a, 0, grids.system, shift_sys)
    sys_vals = grids.system.points
    shift_pt = (sys_vals[:, None] * t_eff
                - 0.5 * spec_vals[None, :] * t_eff**2)[:, None, :]
    return _fft_shift_axis(b, 1, grids.pointer, shift_pt)


def brute_force_reduced(params: ModelParams, basis: str,
                        grids: OracleGrids | None = None) -> DensityMatrix:
    """Independent oracle: build the tripartite amplitude, apply the exact
    evolution shift map by band-limited resampling, trace out both
    environments numerically. Small grids only."""
    if grids is None:
        grids = default_oracle_grids(params, basis)
    t = params.t
    if basis == POSITION:
        if math.isfinite(params.mass):
            raise ConfigurationError(
                "finite-mass oracle is only available in the momentum basis"
            )
        sys_a = params.system.amplitude(grids.system.points).astype(complex)
        pt_a = params.env1.amplitude(grids.pointer.points).astype(complex)
        sp_a = params.env2.amplitude(grids.spectator.points).astype(complex)
        b = _evolved_tripartite(sys_a, pt_a, sp_a, grids, t)
    elif basis == MOMENTUM:
        sys_a = params.system.momentum_amplitude(grids.system.points)
        pt_a = params.env2.momentum_amplitude(grids.pointer.points)
        sp_a = params.env1.momentum_amplitude(grids.spectator.points)
        b = _evolved_tripartite(sys_a, pt_a, sp_a, grids, -t)
        if math.isfinite(params.mass):
            p = grids.system.points[:, None, None]
            p1 = grids.spectator.points[None, None, :]
            b = b * np.exp(-1j * (p**2 * t / (2.0 * params.mass)
                                  + p * p1 * t**2 / (2.0 * params.mass)))
    else:
        raise ConfigurationError(f"unknown basis {basis!r}")
    m = b.reshape(grids.system.n, -1)
    raw = (m @ m.conj().T) * grids.pointer.dx * grids.spectator.dx
    raw = raw * grids.system.dx
    return _finalize(grids.system, basis, raw)
