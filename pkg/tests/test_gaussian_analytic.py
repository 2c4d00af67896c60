import math

import numpy as np
import pytest

from conjdeco.errors import ConfigurationError
from conjdeco.gaussian_analytic import (
    GaussianModel,
    analytic_rho_momentum,
    analytic_rho_position,
    asymptotic_widths,
)
from conjdeco.wavepacket import GaussianSpec

MODEL = GaussianModel(sigma=1.0, eta1=1.0, eta2=1.0)


def test_rejects_nonpositive_scales():
    with pytest.raises(ConfigurationError):
        GaussianModel(0.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        GaussianModel(1.0, -1.0, 1.0)


def test_t0_is_pure_projector_position():
    x = np.linspace(-4, 4, 33)
    rho = analytic_rho_position(MODEL, 0.0, x[:, None], x[None, :])
    psi = GaussianSpec(0.0, MODEL.sigma).amplitude(x)
    np.testing.assert_allclose(rho, np.outer(psi, psi.conj()), atol=1e-14)


def test_t0_is_pure_projector_momentum():
    p = np.linspace(-3, 3, 33)
    rho = analytic_rho_momentum(MODEL, 0.0, p[:, None], p[None, :])
    phi = GaussianSpec(0.0, MODEL.sigma).momentum_amplitude(p)
    np.testing.assert_allclose(rho, np.outer(phi, phi.conj()), atol=1e-14)


@pytest.mark.parametrize("t", [0.0, 1.0, 7.5])
def test_diagonal_normalization(t):
    x = np.linspace(-200, 200, 20001)
    dx = x[1] - x[0]
    diag = np.real(analytic_rho_position(MODEL, t, x, x))
    assert diag.sum() * dx == pytest.approx(1.0, abs=1e-10)
    diag_m = np.real(analytic_rho_momentum(MODEL, t, x, x))
    assert diag_m.sum() * dx == pytest.approx(1.0, abs=1e-10)


def test_widths_at_t0_are_pure_state_values():
    w = asymptotic_widths(MODEL, 0.0)
    # pure Gaussian: both cuts have std sqrt(2)*sigma (position) and
    # sqrt(2)*sigma_p (momentum)
    assert w.offdiag_pos == pytest.approx(math.sqrt(2.0))
    assert w.diag_pos == pytest.approx(math.sqrt(2.0))
    assert w.offdiag_mom == pytest.approx(math.sqrt(2.0) * 0.5)
    assert w.diag_mom == pytest.approx(math.sqrt(2.0) * 0.5)


def test_large_t_scalings():
    m = GaussianModel(sigma=0.7, eta1=1.3, eta2=0.4)
    t = 1e4
    w = asymptotic_widths(m, t)
    assert w.offdiag_pos == pytest.approx(math.sqrt(2.0) * m.eta1 / t, rel=1e-6)
    assert w.diag_pos == pytest.approx(math.sqrt(2.0) * m.eta2 * t, rel=1e-6)
    assert w.offdiag_mom == pytest.approx(1.0 / (math.sqrt(2.0) * m.eta2 * t), rel=1e-6)
    assert w.diag_mom == pytest.approx(t / (math.sqrt(2.0) * m.eta1), rel=1e-6)


def test_widths_match_profile_decay():
    # the reported widths are the actual Gaussian stds of the two cuts
    m = GaussianModel(sigma=1.0, eta1=0.8, eta2=1.1)
    t = 3.0
    w = asymptotic_widths(m, t)
    u = w.offdiag_pos
    anti = analytic_rho_position(m, t, u / math.sqrt(2), -u / math.sqrt(2))
    peak = analytic_rho_position(m, t, 0.0, 0.0)
    assert abs(anti / peak) == pytest.approx(math.exp(-0.5), rel=1e-12)
    v = w.diag_mom
    diag = analytic_rho_momentum(m, t, v / math.sqrt(2), v / math.sqrt(2))
    peak_m = analytic_rho_momentum(m, t, 0.0, 0.0)
    assert abs(diag / peak_m) == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_position_momentum_duality():
    # momentum form of (sigma, eta1, eta2) equals position form of the dual
    # model (1/(2 sigma), 1/(2 eta2), 1/(2 eta1)) up to the mirrored roles
    m = GaussianModel(sigma=1.4, eta1=0.6, eta2=0.9)
    dual = GaussianModel(0.5 / m.sigma, 0.5 / m.eta2, 0.5 / m.eta1)
    t = 2.5
    q = np.linspace(-2, 2, 17)
    a = analytic_rho_momentum(m, t, q[:, None], q[None, :])
    b = analytic_rho_position(dual, t, q[:, None], q[None, :])
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_negative_time_rejected():
    with pytest.raises(ConfigurationError):
        asymptotic_widths(MODEL, -1.0)
