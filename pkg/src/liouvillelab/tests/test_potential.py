import gc
import math
import pickle
import weakref

import numpy as np
import pytest

from liouvillelab.core import ConicalWeight, Disk, GridField
from liouvillelab.exceptions import InvalidPotentialError
from liouvillelab.potential import (
    ConstantPotential,
    RadialPotential,
    SampledPotential,
    family_potential,
    k1_condition_check,
)


@pytest.fixture
def step() -> RadialPotential:
    return RadialPotential([0.5], [4.0, 1.0])


class TestConstantPotential:
    def test_defaults(self) -> None:
        K = ConstantPotential(2.0)
        assert (K.a, K.b, K.sigma_bar) == (2.0, 2.0, 1.0)
        assert K.kind == "constant"
        assert K.is_radial
        np.testing.assert_array_equal(K(np.zeros(3), np.ones(3)), [2.0, 2.0, 2.0])

    def test_outside_bounds(self) -> None:
        with pytest.raises(InvalidPotentialError, match="outside"):
            ConstantPotential(3.0, a=1.0, b=2.0)

    @pytest.mark.parametrize("kwargs", [{"a": 0.0, "b": 1.0}, {"a": 2.0, "b": 1.0}])
    def test_bad_bounds(self, kwargs: dict) -> None:
        with pytest.raises(InvalidPotentialError, match="Bounds"):
            ConstantPotential(1.0, **kwargs)

    def test_bad_constants(self) -> None:
        with pytest.raises(InvalidPotentialError, match="sigma_bar"):
            ConstantPotential(1.0, sigma_bar=0.5)
        with pytest.raises(InvalidPotentialError, match="rho_bar"):
            ConstantPotential(1.0, rho_bar=0.75)

    def test_polygon_mass(self) -> None:
        K = ConstantPotential(3.0)
        square = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
        assert K.polygon_mass(square, ConicalWeight(0.0)) == pytest.approx(12.0)


class TestRadialPotential:
    def test_values(self, step: RadialPotential) -> None:
        assert step.kind == "piecewise-radial"
        assert step.breakpoints == (0.5,)
        assert (step.a, step.b, step.sigma_bar) == (1.0, 4.0, 4.0)
        np.testing.assert_array_equal(step(np.array([0.0, 0.49, 0.5, 2.0]), np.zeros(4)), [4.0, 4.0, 1.0, 1.0])

    def test_bad_breakpoints(self) -> None:
        with pytest.raises(InvalidPotentialError, match="one more entry"):
            RadialPotential([0.5, 1.0], [1.0, 2.0])
        with pytest.raises(InvalidPotentialError, match="strictly increasing"):
            RadialPotential([1.0, 0.5], [1.0, 2.0, 3.0])

    def test_not_radial(self) -> None:
        K = SampledPotential.from_function(lambda x, y: 1 + x**2, 1.0, 17)
        assert not K.is_radial
        with pytest.raises(TypeError, match="not radial"):
            K.radial(0.5)

    @pytest.mark.parametrize("alpha", [0.0, -0.5])
    def test_polygon_mass_is_exact(self, step: RadialPotential, alpha: float) -> None:
        w = ConicalWeight(alpha)
        polygon = Disk((0.0, 0.0), 1.0).polyline(4096)
        exact = 4.0 * w.disk_measure(0.5) + 1.0 * (w.disk_measure(1.0) - w.disk_measure(0.5))
        assert step.polygon_mass(polygon, w) == pytest.approx(exact, rel=1e-6)

    def test_family_potential(self) -> None:
        K = family_potential(1.0, 4.0, 10.0)
        assert K.breakpoints == (0.1,)
        assert K.radial(0.05) == 4.0
        assert K.radial(0.5) == 1.0
        assert K.sigma_bar == 4.0
        assert family_potential(2.0, 2.0, 3.0).sigma_bar == 1.0


class TestSampledPotential:
    def test_interpolates(self) -> None:
        K = SampledPotential.from_function(lambda x, y: 3 + x + y, 1.0, 33)
        assert K(0.3, -0.1) == pytest.approx(3.2)
        assert (K.a, K.b) == (pytest.approx(1.0), pytest.approx(5.0))

    def test_needs_positive_values(self) -> None:
        with pytest.raises(InvalidPotentialError):
            SampledPotential(GridField(np.zeros((17, 17)), 1.0, domain="square"))

    def test_on_grid_is_cached(self) -> None:
        K = ConstantPotential(2.0)
        field = GridField(np.zeros((17, 17)), 1.0)
        first = K.on_grid(field)
        assert K.on_grid(field) is first
        assert not first.flags.writeable

    def test_on_grid_cache_follows_field(self) -> None:
        K = ConstantPotential(2.0)
        field = GridField(np.zeros((33, 33)), 1.0)
        ref = weakref.ref(K.on_grid(field))
        assert len(K._grid_cache) == 1
        del field
        gc.collect()
        assert ref() is None
        assert len(K._grid_cache) == 0

    def test_pickle_drops_cache(self) -> None:
        K = ConstantPotential(2.0)
        field = GridField(np.zeros((17, 17)), 1.0)
        K.on_grid(field)
        copy = pickle.loads(pickle.dumps(K))
        assert len(copy._grid_cache) == 0
        np.testing.assert_array_equal(copy.on_grid(field), K.on_grid(field))


class TestK1:
    def test_constant(self) -> None:
        report = k1_condition_check(ConstantPotential(1.0), n=11)
        assert report.sigma_bar == 1.0
        assert report.n_pairs > 0

    def test_step(self, step: RadialPotential) -> None:
        report = k1_condition_check(step, n=21)
        assert report.sigma_bar == pytest.approx(4.0)
        (x0, y0), (x1, y1) = report.worst_pair
        assert math.hypot(x0, y0) < 0.5 <= math.hypot(x1, y1)

    def test_log_modulus(self, step: RadialPotential) -> None:
        report = k1_condition_check(step, n=21, B=1.0)
        assert report.sigma_bar < 4.0
