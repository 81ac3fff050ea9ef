import math
import warnings

import numpy as np
import pytest

from liouvillelab.closed_form import BubbleParams, centered_bubble, family_u
from liouvillelab.core import GridField
from liouvillelab.exceptions import (
    BlowupOverflowError,
    DampingWarning,
    InvalidWeightError,
    NonConvergenceError,
    OutOfDomainError,
)
from liouvillelab.potential import ConstantPotential, SampledPotential
from liouvillelab.sample_data import bubble_field
from liouvillelab.solvers import (
    Dirichlet2D,
    RadialIVP,
    profile_on_grid,
    radial_mass,
    residual,
    solve_dirichlet,
    solve_radial,
)


def bubble_error(n: int, alpha: float = 0.0, M: float = 3.0) -> float:
    grid = bubble_field(alpha, 1.0, M, n=n)
    solution = solve_dirichlet(Dirichlet2D(grid, alpha=alpha, K=ConstantPotential(1.0)))
    return float(np.max(np.abs(solution.values - grid.values)[solution.mask]))


class TestRadialIVP:
    def test_validation(self) -> None:
        K = ConstantPotential(1.0)
        with pytest.raises(InvalidWeightError):
            RadialIVP(0.5, K, 1.0, 1.0)
        with pytest.raises(ValueError, match="r_max"):
            RadialIVP(0.0, K, 1.0, 0.0)
        with pytest.raises(ValueError, match="tol"):
            RadialIVP(0.0, K, 1.0, 1.0, tol=0.1)
        sampled = SampledPotential.from_function(lambda x, y: 1 + x**2, 1.0, 17)
        with pytest.raises(ValueError, match="radial potential"):
            RadialIVP(0.0, sampled, 1.0, 1.0)

    def test_mesh_holds_breakpoints(self) -> None:
        p = BubbleParams(0.0, 1.0, 4.0, 3.0)
        mesh = RadialIVP(0.0, p.potential, 1.0, 1.0, n_out=101).output_mesh(1e-4)
        assert mesh[0] == 0.0
        assert mesh[-1] == 1.0
        assert 1 / 3 in mesh
        assert np.all(np.diff(mesh) > 0)


class TestSolveRadial:
    @pytest.mark.parametrize("alpha, M", [(0.0, 3.0), (-0.5, 3.0), (-0.75, 1.0)])
    def test_matches_bubble(self, alpha: float, M: float) -> None:
        profile = solve_radial(RadialIVP(alpha, ConstantPotential(2.0), M, 10.0))
        exact = centered_bubble(alpha, 2.0, M, profile.nodes)
        np.testing.assert_allclose(profile.values, exact, atol=1e-6)
        assert profile.values[0] == M
        assert (profile.derivatives is None) == (alpha <= -0.5)

    def test_family_member(self) -> None:
        p = BubbleParams(-0.25, 1.0, 4.0, 5.0)
        profile = solve_radial(RadialIVP(p.alpha, p.potential, family_u(p, 0.0), 1.0))
        np.testing.assert_allclose(profile.values, family_u(p, profile.nodes), atol=1e-6)

    def test_overflow(self) -> None:
        with pytest.raises(BlowupOverflowError, match="overflows") as info:
            solve_radial(RadialIVP(0.0, ConstantPotential(1.0), 800.0, 1.0))
        assert info.value.radius == 0.0

    @pytest.mark.parametrize("alpha", [0.0, -0.5])
    def test_mass(self, alpha: float) -> None:
        b, M = 1.0, 2.0
        K = ConstantPotential(b)
        profile = solve_radial(RadialIVP(alpha, K, M, 5.0))
        k = 2 * (1 + alpha)
        y = math.exp(M) * b / (8 * (1 + alpha) ** 2)
        for r in [0.5, 1.0, 5.0]:
            exact = 8 * math.pi * (1 + alpha) * y * r**k / (1 + y * r**k)
            assert radial_mass(profile, K, r) == pytest.approx(exact, rel=1e-4)
        assert radial_mass(profile, K, 0.0) == 0.0
        with pytest.raises(OutOfDomainError):
            radial_mass(profile, K, 6.0)

    def test_profile_on_grid(self) -> None:
        profile = solve_radial(RadialIVP(0.0, ConstantPotential(1.0), 1.0, 1.0))
        field = profile_on_grid(profile, 1.0, 33)
        assert field.values[16, 16] == pytest.approx(1.0)
        # corners lie beyond the profile
        assert np.isnan(field.values[0, 0])


class TestDirichlet:
    def test_validation(self) -> None:
        grid = GridField(np.zeros((17, 17)), 1.0)
        with pytest.raises(ValueError, match="newton_tol"):
            Dirichlet2D(grid, newton_tol=0.0)
        with pytest.raises(InvalidWeightError):
            Dirichlet2D(grid, alpha=-1.0)

    def test_harmonic_extension(self) -> None:
        grid = GridField(np.zeros((33, 33)), 1.0)
        solution = solve_dirichlet(Dirichlet2D(grid, boundary=lambda x, y: x - 2 * y))
        X, Y = solution.coordinates
        np.testing.assert_allclose(solution.values, X - 2 * Y, atol=1e-10)

    def test_constant_boundary(self) -> None:
        grid = GridField(np.zeros((17, 17)), 1.0)
        solution = solve_dirichlet(Dirichlet2D(grid, boundary=2.5))
        np.testing.assert_allclose(solution.values[solution.mask], 2.5, atol=1e-10)

    def test_missing_data(self) -> None:
        values = np.zeros((17, 17))
        values[0, 8] = np.nan
        grid = GridField(values, 1.0)
        with pytest.raises(ValueError, match="finite"):
            solve_dirichlet(Dirichlet2D(grid))

    def test_second_order(self) -> None:
        coarse, fine = bubble_error(65), bubble_error(129)
        assert coarse < 2e-2
        assert fine < coarse / 3

    @pytest.mark.parametrize("alpha", [0.0, -0.5])
    def test_residual_vanishes(self, alpha: float) -> None:
        grid = bubble_field(alpha, 1.0, 1.0, n=65)
        K = ConstantPotential(1.0)
        solution = solve_dirichlet(Dirichlet2D(grid, alpha=alpha, K=K))
        res = residual(solution, alpha, K)
        assert np.nanmax(np.abs(res.values[res.mask])) < 1e-7
        # the sampled bubble itself is only a discrete solution up to truncation
        assert np.nanmax(np.abs(residual(grid, alpha, K).values[res.mask])) > 1e-7

    def test_non_convergence(self) -> None:
        grid = bubble_field(0.0, 1.0, 3.0, n=33)
        start = grid.with_values(np.where(grid.mask, 0.0, grid.values))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DampingWarning)
            with pytest.raises(NonConvergenceError) as info:
                solve_dirichlet(Dirichlet2D(start, K=ConstantPotential(1.0), max_iter=1))
        assert info.value.residual > 1e-8
