"""Decoherence and equilibration diagnostics for density matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvariantViolation
from .evolution import PSD_TOL, DensityMatrix, DiagonalDistribution

EIG_CLAMP = 1e-12


@dataclass(frozen=True)
class MetricReport:
    t: float
    basis: str
    purity: float
    entropy: float
    l1_coherence: float
    offdiag_width: float
    diag_width: float
    flatness_cv: float

    def __post_init__(self):
        if self.purity > 1.0 + 1e-9:
            raise InvariantViolation(f"purity {self.purity} > 1")
        if self.entropy < -1e-9:
            raise InvariantViolation(f"entropy {self.entropy} < 0")


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float
    t_range: tuple[float, float]


def fit_gaussian_width(u: np.ndarray, values: np.ndarray,
                       rel_floor: float = 1e-6) -> float:
    """Standard deviation of a Gaussian profile |values| ~ A exp(-u^2/2s^2),
    by least squares on the log against u^2."""
    mags = np.abs(np.asarray(values, dtype=complex))
    u = np.asarray(u, dtype=float)
    peak = mags.max()
    if peak <= 0:
        raise ConfigurationError("cannot fit a width to all-zero values")
    mask = mags > peak * rel_floor
    if mask.sum() < 3:
        raise ConfigurationError("too few points above the floor to fit a width")
    y = np.log(mags[mask])
    a = np.vstack([np.ones(mask.sum()), u[mask] ** 2]).T
    coeffs, *_ = np.linalg.lstsq(a, y, rcond=None)
    slope = coeffs[1]
    if slope >= 0:
        raise ConfigurationError("profile is not decaying; width undefined")
    return math.sqrt(-0.5 / slope)


def _matrix_cut_width(rho: DensityMatrix, direction: str) -> float:
    n = rho.grid.n
    c = n // 2
    dx = rho.grid.dx
    if direction == "anti":
        kmax = min(c, n - 1 - c)
        k = np.arange(-kmax, kmax + 1)
        vals = rho.elems[c + k, c - k]
        u = k * dx * math.sqrt(2.0)
    else:
        j = np.arange(n)
        vals = np.diag(rho.elems)
        u = (rho.grid.points - rho.grid.points[c]) * math.sqrt(2.0)
    return fit_gaussian_width(u, vals)


def analyze(rho: DensityMatrix, t: float = math.nan,
            flatness_halfwidth: float | None = None) -> MetricReport:
    """Purity, entropy, l1 coherence, fitted cut widths, diagonal flatness.

    flatness_halfwidth fixes the central window for the flatness statistic
    (defaults to a quarter of the grid half-width).
    """
    elems = rho.elems
    diag = np.real(np.diag(elems))
    tr = diag.sum()
    purity = float(np.sum(np.abs(elems) ** 2))
    eig = np.linalg.eigvalsh(elems)
    if eig[0] < -PSD_TOL:
        raise InvariantViolation(
            f"min eigenvalue {eig[0]:.3g} below -{PSD_TOL}; entropy undefined"
        )
    lam = np.clip(eig, 0.0, None)
    lam = lam[lam > EIG_CLAMP]
    entropy = float(-np.sum(lam * np.log(lam)))
    l1 = float((np.abs(elems).sum() - np.abs(diag).sum()) / tr)
    if flatness_halfwidth is None:
        flatness_halfwidth = 0.25 * min(-rho.grid.x_min, rho.grid.x_max)
    window = np.abs(rho.grid.points) <= flatness_halfwidth
    vals = diag[window]
    flatness = float(vals.std() / vals.mean())

    def _width(direction):
        # nan marks a cut the grid spacing cannot resolve
        try:
            return _matrix_cut_width(rho, direction)
        except ConfigurationError:
            return math.nan

    return MetricReport(
        t=t,
        basis=rho.basis,
        purity=purity,
        entropy=entropy,
        l1_coherence=l1,
        offdiag_width=_width("anti"),
        diag_width=_width("diag"),
        flatness_cv=flatness,
    )


def fit_powerlaw(ts, values) -> ScalingFit:
    """OLS of log(value) against log(t)."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if ts.size < 5:
        raise ConfigurationError("need at least 5 points for a scaling fit")
    if np.any(np.diff(ts) <= 0):
        raise ConfigurationError("times must be strictly increasing")
    if np.any(values <= 0):
        raise ConfigurationError("scaling fit needs positive values")
    x = np.log(ts)
    y = np.log(values)
    a = np.vstack([np.ones_like(x), x]).T
    coeffs, *_ = np.linalg.lstsq(a, y, rcond=None)
    pred = a @ coeffs
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot < 1e-30 else max(0.0, 1.0 - ss_res / ss_tot)
    return ScalingFit(
        exponent=float(coeffs[1]),
        prefactor=float(math.exp(coeffs[0])),
        r_squared=r2,
        t_range=(float(ts[0]), float(ts[-1])),
    )


def fit_scaling(reports, field: str) -> ScalingFit:
    """Power-law fit of one MetricReport field over time (asymptotic regime)."""
    ts = np.array([r.t for r in reports], dtype=float)
    if np.any(ts < 5.0):
        raise ConfigurationError("scaling fits use the asymptotic regime t >= 5")
    values = np.array([getattr(r, field) for r in reports], dtype=float)
    return fit_powerlaw(ts, values)


def time_averaged_observable(rhos, obs, window) -> float:
    """(1/tau) int Tr(rho(t) O) dt by trapezoid over the supplied samples.

    rhos: sequence of (t, DensityMatrix) in matching basis; obs: 1-D array of
    diagonal observable values on the grid, or a full Hermitian matrix.
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise ConfigurationError("window must have positive length")
    inside = sorted((t, rho) for t, rho in rhos if a <= t <= b)
    if (len(inside) < 2 or abs(inside[0][0] - a) > 1e-12
            or abs(inside[-1][0] - b) > 1e-12):
        raise ConfigurationError(
            f"samples do not cover the window [{a}, {b}] end to end"
        )
    obs = np.asarray(obs)
    ts = np.array([t for t, _ in inside])
    if obs.ndim == 1:
        exps = [float(np.real(np.sum(np.diag(rho.elems) * obs)))
                for _, rho in inside]
    else:
        if np.abs(obs - obs.conj().T).max() > 1e-10:
            raise ConfigurationError("observable must be Hermitian")
        exps = [float(np.real(np.trace(rho.elems @ obs))) for _, rho in inside]
    return float(np.trapezoid(exps, ts) / (b - a))


def uniformity_spectrum(dist: DiagonalDistribution, window: float) -> float:
    """Max nonzero-frequency magnitude over the zero mode of the windowed
    DFT of the diagonal distribution; 0 for an exactly uniform window."""
    mask = np.abs(dist.grid.points) <= window
    if mask.sum() < 4:
        raise ConfigurationError("window contains too few grid points")
    spec = np.abs(np.fft.fft(dist.probs[mask]))
    return float(spec[1:].max() / spec[0])
