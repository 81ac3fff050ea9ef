import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouvillelab.core import (
    Cell,
    ConicalWeight,
    Disk,
    GridField,
    RadialProfile,
    cell_measures,
    disk_weighted_integral,
    dual_cell_weights,
    interpolate,
    polygon_weighted_area,
    weighted_area,
    weighted_length,
    winding_number,
)
from liouvillelab.exceptions import InvalidWeightError, OutOfDomainError, SingularBoundaryError

SQUARE = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])


@pytest.fixture
def linear_field() -> GridField:
    return GridField.from_function(lambda x, y: 2 * x - y, 1.0, 33)


class TestConicalWeight:
    @pytest.mark.parametrize("alpha", [0.1, -1.0, -1.5])
    def test_bad_alpha(self, alpha: float) -> None:
        with pytest.raises(InvalidWeightError, match="alpha must lie in"):
            ConicalWeight(alpha)

    def test_bad_scale(self) -> None:
        with pytest.raises(InvalidWeightError, match="scale must be positive"):
            ConicalWeight(-0.5, scale=0.0)

    def test_call(self) -> None:
        w = ConicalWeight(-0.5, (1.0, 0.0))
        assert w(1.0, 4.0) == pytest.approx(0.25)
        assert w(1.0, 0.0) == np.inf
        assert ConicalWeight(0.0)(0.0, 0.0) == 1.0

    def test_disk_measure(self) -> None:
        assert ConicalWeight(0.0).disk_measure(1.0) == pytest.approx(math.pi)
        assert ConicalWeight(-0.5).disk_measure(1.0) == pytest.approx(2 * math.pi)
        assert ConicalWeight(-0.5, scale=4.0).disk_measure(1.0) == pytest.approx(math.pi / 2)

    def test_immutable(self) -> None:
        w = ConicalWeight(-0.5)
        with pytest.raises(AttributeError):
            w.alpha = 0.0  # type: ignore[misc]


class TestAreas:
    @pytest.mark.parametrize("alpha", [0.0, -0.25, -0.5, -0.9])
    def test_centered_disk(self, alpha: float) -> None:
        w = ConicalWeight(alpha)
        assert weighted_area(Disk((0.0, 0.0), 2.0), w) == pytest.approx(w.disk_measure(2.0), rel=1e-12)

    @pytest.mark.parametrize("center", [(0.3, 0.1), (2.0, 0.0), (0.0, -3.0)])
    def test_off_center_disk_unweighted(self, center: tuple) -> None:
        w = ConicalWeight(0.0, center)
        assert weighted_area(Disk((0.0, 0.0), 1.0), w) == pytest.approx(math.pi, rel=1e-10)

    def test_off_center_disk_matches_polygon(self) -> None:
        w = ConicalWeight(-0.5, (0.4, 0.2))
        disk = Disk((0.0, 0.0), 1.0)
        polygon = weighted_area(disk.polyline(8192), w)
        assert weighted_area(disk, w) == pytest.approx(polygon, rel=1e-6)

    def test_square(self) -> None:
        assert polygon_weighted_area(SQUARE, ConicalWeight(0.0)) == pytest.approx(1.0, rel=1e-12)
        assert polygon_weighted_area(SQUARE[::-1], ConicalWeight(0.0)) == pytest.approx(-1.0, rel=1e-12)

    def test_square_singular(self) -> None:
        # int over [-1, 1]^2 of 1/|x| is 8 log(1 + sqrt 2)
        w = ConicalWeight(-0.5)
        exact = 8 * math.log(1 + math.sqrt(2))
        assert weighted_area(Cell(-1.0, -1.0, 1.0, 1.0), w) == pytest.approx(exact, rel=1e-12)
        edges = np.linspace(-1.0, 1.0, 9)
        measures = cell_measures(edges, edges, w)
        assert measures.shape == (8, 8)
        assert np.all(measures > 0)
        assert measures.sum() == pytest.approx(exact, rel=1e-12)

    def test_clip_radius(self) -> None:
        big = 2 * SQUARE
        assert polygon_weighted_area(big, ConicalWeight(0.0), clip_radius=0.25) == pytest.approx(
            math.pi / 16, rel=1e-12
        )
        w = ConicalWeight(-0.5)
        assert polygon_weighted_area(big, w, clip_radius=0.25) == pytest.approx(w.disk_measure(0.25), rel=1e-12)

    def test_cell_methods_agree(self) -> None:
        w = ConicalWeight(-0.5)
        cell = Cell(0.5, 0.25, 1.0, 1.0)
        polar = weighted_area(cell, w, method="polar")
        quad = weighted_area(cell, w, method="quadrature")
        assert polar == pytest.approx(quad, rel=1e-8)

    def test_quadrature_refuses_cone_point(self) -> None:
        with pytest.raises(ValueError, match="cone point"):
            weighted_area(Cell(-1.0, -1.0, 1.0, 1.0), ConicalWeight(-0.5), method="quadrature")

    def test_disk_integral_of_one(self) -> None:
        w = ConicalWeight(-0.25, (0.1, 0.0))
        disk = Disk((0.0, 0.0), 0.5)
        value = disk_weighted_integral(disk, w, lambda x, y: np.ones_like(x))
        assert value == pytest.approx(weighted_area(disk, w), rel=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(
        alpha=st.floats(-0.95, 0.0),
        cx=st.floats(-5.0, 5.0),
        cy=st.floats(-5.0, 5.0),
        lam=st.floats(0.1, 10.0),
    )
    def test_translation_and_scaling(self, alpha: float, cx: float, cy: float, lam: float) -> None:
        polygon = np.array([[0.2, -0.3], [0.9, 0.1], [0.4, 0.8], [-0.6, 0.3]])
        w = ConicalWeight(alpha)
        base = polygon_weighted_area(polygon, w)
        moved = polygon_weighted_area(polygon + [cx, cy], ConicalWeight(alpha, (cx, cy)))
        assert moved == pytest.approx(base, rel=1e-9)
        scaled = polygon_weighted_area(lam * polygon, w)
        assert scaled == pytest.approx(lam**w.beta * base, rel=1e-9)


class TestLength:
    def test_circle(self) -> None:
        path = Disk((0.0, 0.0), 1.0).polyline(4096)
        assert weighted_length(path, ConicalWeight(0.0)) == pytest.approx(2 * math.pi, rel=1e-6)

    def test_singular_circle(self) -> None:
        path = Disk((0.0, 0.0), 4.0).polyline(4096)
        assert weighted_length(path, ConicalWeight(-0.5)) == pytest.approx(4 * math.pi, rel=1e-6)

    def test_density(self) -> None:
        path = np.array([[0.0, 1.0], [2.0, 1.0]])
        length = weighted_length(path, ConicalWeight(0.0), density=lambda x, y: x)
        assert length == pytest.approx(2.0, rel=1e-10)

    def test_vertex_on_cone_point(self) -> None:
        path = np.array([[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(SingularBoundaryError):
            weighted_length(path, ConicalWeight(-0.5))
        assert weighted_length(path, ConicalWeight(0.0)) == pytest.approx(2.0)


class TestGridField:
    def test_too_small(self) -> None:
        with pytest.raises(ValueError, match="at least 16"):
            GridField(np.zeros((8, 8)), 1.0)

    def test_immutable(self, linear_field: GridField) -> None:
        with pytest.raises(RuntimeError, match="immutable"):
            linear_field.values = np.zeros((33, 33))
        with pytest.raises(ValueError):
            linear_field.values[0, 0] = 1.0

    def test_grid(self, linear_field: GridField) -> None:
        assert linear_field.n == 33
        assert linear_field.spacing == pytest.approx(1 / 16)
        assert not linear_field.mask[0, 0]
        assert linear_field.mask[16, 16]
        assert np.all(linear_field.mask[linear_field.interior])

    def test_sample_is_exact_for_linear(self, linear_field: GridField) -> None:
        x = np.array([0.01, -0.37, 0.5])
        y = np.array([0.2, 0.11, -0.73])
        np.testing.assert_allclose(linear_field.sample(x, y), 2 * x - y, atol=1e-12)

    def test_sample_outside(self, linear_field: GridField) -> None:
        assert np.isnan(linear_field.sample(1.5, 0.0))
        with pytest.raises(OutOfDomainError):
            interpolate(linear_field, (0.0, 2.0))
        assert interpolate(linear_field, (0.25, 0.5)) == pytest.approx(0.0, abs=1e-12)

    def test_nan_inside_domain(self) -> None:
        values = np.zeros((17, 17))
        values[8, 8] = np.nan
        with pytest.raises(ValueError, match="finite"):
            GridField(values, 1.0)

    def test_netcdf_round_trip(self, linear_field: GridField, tmp_path) -> None:
        path = tmp_path / "field.nc"
        linear_field.save(path)
        loaded = GridField.load(path)
        np.testing.assert_array_equal(loaded.values, linear_field.values)
        np.testing.assert_array_equal(loaded.mask, linear_field.mask)
        assert loaded.extent == linear_field.extent
        assert loaded.domain == "disk"

    def test_dual_cell_weights(self) -> None:
        field = GridField(np.zeros((17, 17)), 1.0, domain="square")
        weights = dual_cell_weights(field, ConicalWeight(-0.5))
        assert np.all(np.isfinite(weights))
        # the cone point sits on the central node
        assert weights[8, 8] == weights.max()


class TestRadialProfile:
    def test_nan_outside(self) -> None:
        r = np.linspace(0.0, 1.0, 11)
        profile = RadialProfile(r, 1 - r**2, derivatives=-2 * r)
        assert profile(0.55) == pytest.approx(1 - 0.55**2)
        assert np.isnan(profile(1.5))
        assert profile.r_max == 1.0
        assert len(profile) == 11

    def test_increasing_nodes(self) -> None:
        with pytest.raises(ValueError, match="strictly increasing"):
            RadialProfile(np.array([0.0, 0.5, 0.5]), np.zeros(3))


def test_winding_number() -> None:
    circle = Disk((0.0, 0.0), 1.0).polyline(64)
    assert winding_number(circle, (0.0, 0.0)) == 1
    assert winding_number(circle[::-1], (0.1, 0.2)) == -1
    assert winding_number(circle, (2.0, 0.0)) == 0
