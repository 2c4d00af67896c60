import math

import numpy as np
import pytest

from conjdeco.errors import ConfigurationError, SupportOverflowError
from conjdeco.evolution import (
    DensityMatrix,
    ModelParams,
    basis_change,
    free_particle_momentum_kernel,
    kernel_cut,
    kernel_values,
    long_time_diagonal,
    momentum_kernel,
    position_kernel,
    required_momentum_half_width,
    required_position_half_width,
    sized_grid,
)
from conjdeco.gaussian_analytic import GaussianModel, analytic_rho_momentum, analytic_rho_position
from conjdeco.wavepacket import MOMENTUM, POSITION, GaussianSpec, Grid

MODEL = GaussianModel(1.0, 1.0, 1.0)


def make_params(t, sigma=1.0, eta1=1.0, eta2=1.0, mass=math.inf):
    return ModelParams(GaussianSpec(0.0, sigma), GaussianSpec(0.0, eta1),
                       GaussianSpec(0.0, eta2), t, mass=mass)


def analytic_matrix(basis, t, grid, model=MODEL):
    pts = grid.points
    if basis == POSITION:
        vals = analytic_rho_position(model, t, pts[:, None], pts[None, :])
    else:
        vals = analytic_rho_momentum(model, t, pts[:, None], pts[None, :])
    vals = vals * grid.dx
    return vals / np.real(np.trace(vals))


class TestKernelsAgainstClosedForm:
    @pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
    def test_position(self, t):
        p = make_params(t)
        grid = sized_grid(192, p, POSITION)
        rho = position_kernel(p, grid)
        np.testing.assert_allclose(
            rho.elems, analytic_matrix(POSITION, t, grid), atol=1e-12)

    @pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
    def test_momentum(self, t):
        p = make_params(t)
        grid = sized_grid(192, p, MOMENTUM)
        rho = momentum_kernel(p, grid)
        np.testing.assert_allclose(
            rho.elems, analytic_matrix(MOMENTUM, t, grid), atol=1e-12)

    def test_nonunit_scales(self):
        model = GaussianModel(0.8, 1.5, 0.6)
        p = make_params(3.0, sigma=0.8, eta1=1.5, eta2=0.6)
        grid = sized_grid(192, p, POSITION)
        rho = position_kernel(p, grid)
        np.testing.assert_allclose(
            rho.elems, analytic_matrix(POSITION, 3.0, grid, model), atol=1e-12)


class TestInvariants:
    @pytest.mark.parametrize("t", [0.0, 1.0, 10.0])
    def test_position_kernel_valid(self, t):
        p = make_params(t)
        rho = position_kernel(p, sized_grid(256, p, POSITION))
        rho.assert_valid()
        assert abs(rho.trace() - 1.0) <= 1e-9
        assert rho.hermiticity_defect() <= 1e-12
        assert rho.min_eigenvalue() >= -1e-8

    def test_purity_decreases(self):
        purities = []
        for t in (0.0, 1.0, 2.0, 5.0):
            p = make_params(t)
            purities.append(position_kernel(p, sized_grid(256, p, POSITION)).purity())
        assert purities[0] == pytest.approx(1.0, abs=1e-9)
        assert all(b < a for a, b in zip(purities, purities[1:]))

    def test_pre_trace_close_to_one(self):
        p = make_params(2.0)
        rho = position_kernel(p, sized_grid(256, p, POSITION))
        assert rho.pre_trace == pytest.approx(1.0, abs=1e-8)


class TestSizing:
    def test_required_half_widths_grow_linearly(self):
        p0 = make_params(0.0)
        p1 = make_params(10.0)
        assert required_position_half_width(p1) == pytest.approx(
            required_position_half_width(p0) + 10.0 * 8.0)
        assert required_momentum_half_width(p1) == pytest.approx(
            required_momentum_half_width(p0) + 10.0 * 4.0)

    def test_support_overflow_raised(self):
        p = make_params(10.0)
        with pytest.raises(SupportOverflowError):
            position_kernel(p, Grid.symmetric(64, 10.0))
        with pytest.raises(SupportOverflowError):
            momentum_kernel(p, Grid.symmetric(64, 5.0))

    def test_check_support_optout(self):
        p = make_params(10.0)
        rho = position_kernel(p, Grid.symmetric(64, 30.0), check_support=False)
        assert rho.trace() == pytest.approx(1.0)


class TestCrossBasis:
    def test_basis_change_involutive(self):
        p = make_params(1.0)
        rho = position_kernel(p, sized_grid(256, p, POSITION))
        back = basis_change(basis_change(rho))
        np.testing.assert_allclose(back.elems, rho.elems, atol=1e-12)

    def test_basis_change_preserves_spectrum(self):
        p = make_params(1.0)
        rho = position_kernel(p, sized_grid(256, p, POSITION))
        out = basis_change(rho)
        assert out.basis == MOMENTUM
        np.testing.assert_allclose(
            np.linalg.eigvalsh(out.elems), np.linalg.eigvalsh(rho.elems),
            atol=1e-10)

    def test_matches_momentum_kernel(self):
        p = make_params(1.0)
        hwx = required_position_half_width(p)
        hwp = required_momentum_half_width(p)
        n = 2 ** math.ceil(math.log2(2.0 * hwx * hwp / math.pi))
        gx = Grid.symmetric(n, hwx)
        rho_p = basis_change(position_kernel(p, gx))
        rho_m = momentum_kernel(p, rho_p.grid, check_support=False)
        assert np.abs(rho_p.elems - rho_m.elems).max() <= 1e-10


class TestPointwiseKernel:
    def test_kernel_values_match_matrix(self):
        p = make_params(2.0)
        grid = sized_grid(128, p, POSITION)
        rho = position_kernel(p, grid)
        pts = grid.points
        vals = kernel_values(p, POSITION, pts[:, None], pts[None, :]) * grid.dx
        np.testing.assert_allclose(vals, rho.elems, atol=1e-10)

    def test_kernel_cut_directions(self):
        p = make_params(2.0)
        u = np.linspace(-1.0, 1.0, 11)
        anti = kernel_cut(p, POSITION, "anti", u)
        h = u / math.sqrt(2.0)
        np.testing.assert_allclose(
            anti, kernel_values(p, POSITION, h, -h), atol=1e-14)
        with pytest.raises(ConfigurationError):
            kernel_cut(p, POSITION, "sideways", u)


class TestLongTimeDiagonal:
    def test_position_variance(self):
        # Var X = sigma^2 + eta2^2 t^2
        p = make_params(10.0)
        grid = sized_grid(512, p, POSITION)
        dist = long_time_diagonal(p, POSITION, grid)
        assert dist.variance() == pytest.approx(1.0 + 100.0, rel=1e-6)

    def test_momentum_variance(self):
        # Var P = sigma_p^2 + (t/(2 eta1))^2
        p = make_params(4.0)
        grid = sized_grid(512, p, MOMENTUM)
        dist = long_time_diagonal(p, MOMENTUM, grid)
        assert dist.variance() == pytest.approx(0.25 + 4.0, rel=1e-6)

    def test_matches_kernel_diagonal(self):
        p = make_params(3.0)
        grid = sized_grid(256, p, POSITION)
        dist = long_time_diagonal(p, POSITION, grid)
        rho = position_kernel(p, grid)
        np.testing.assert_allclose(dist.probs, rho.diagonal(), atol=1e-10)

    def test_requires_positive_time(self):
        p = make_params(0.0)
        with pytest.raises(ConfigurationError):
            long_time_diagonal(p, POSITION, Grid.symmetric(64, 10.0))


class TestFreeParticle:
    def test_infinite_mass_limit(self):
        p_inf = make_params(3.0)
        p_heavy = make_params(3.0, mass=1e8)
        grid = sized_grid(192, p_inf, MOMENTUM)
        a = momentum_kernel(p_inf, grid)
        b = free_particle_momentum_kernel(p_heavy, grid)
        assert np.abs(a.elems - b.elems).max() <= 1e-7

    def test_kinetic_phase_preserves_diagonal(self):
        p = make_params(3.0, mass=1.0)
        grid = sized_grid(192, p, MOMENTUM)
        rho = free_particle_momentum_kernel(p, grid)
        ref = momentum_kernel(make_params(3.0), grid)
        np.testing.assert_allclose(rho.diagonal(), ref.diagonal(), atol=1e-12)
        rho.assert_valid()

    def test_invalid_mass_rejected(self):
        with pytest.raises(ConfigurationError):
            make_params(1.0, mass=-2.0)


def test_densitymatrix_guard():
    grid = Grid.symmetric(16, 1.0)
    bad = np.eye(16, dtype=complex)
    bad[0, 1] = 1e-3  # not Hermitian
    from conjdeco.errors import InvariantViolation
    with pytest.raises(InvariantViolation):
        DensityMatrix(grid, POSITION, bad / 16.0).assert_valid()
