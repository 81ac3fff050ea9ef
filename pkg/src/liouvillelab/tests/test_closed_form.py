import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouvillelab.closed_form import (
    BubbleParams,
    bubble_mass,
    bubble_total_curvature,
    centered_bubble,
    family_du,
    family_K,
    family_mass,
    family_profile,
    family_u,
    limit_bubble,
    limit_bubble_du,
    supinf_bound,
    supinf_combination,
)
from liouvillelab.exceptions import OutOfDomainError

TRIPLES = [(0.0, 1.0, 1.0), (-0.5, 1.0, 4.0), (-0.25, 1.0, 2.0), (-0.75, 2.0, 3.0)]


def laplacian_residual(u, alpha: float, K: float, r: float, h: float = 1e-4) -> float:
    """
    ``-(u'' + u'/r) - r^(2 alpha) K e^u`` by central differences.
    """
    up, u0, um = u(r + h), u(r), u(r - h)
    lap = (up - 2 * u0 + um) / h**2 + (up - um) / (2 * h * r)
    return float(-lap - r ** (2 * alpha) * K * math.exp(u0))


class TestBubbleParams:
    def test_properties(self) -> None:
        p = BubbleParams(-0.5, 1.0, 4.0, 10.0)
        assert p.k == 1.0
        assert p.root == 0.5
        assert p.sigma_bar == 4.0
        assert p.log_scale == pytest.approx(math.log(0.5))
        assert p.potential.breakpoints == (0.1,)

    @pytest.mark.parametrize(
        "args, match",
        [((0.5, 1.0, 1.0, 1.0), "alpha"), ((0.0, 2.0, 1.0, 1.0), "0 < a <= b"), ((0.0, 1.0, 1.0, 0.5), "n must")],
    )
    def test_invalid(self, args: tuple, match: str) -> None:
        with pytest.raises(ValueError, match=match):
            BubbleParams(*args)


class TestFamily:
    @pytest.mark.parametrize("alpha, a, b", TRIPLES)
    def test_solves_equation(self, alpha: float, a: float, b: float) -> None:
        p = BubbleParams(alpha, a, b, 4.0)
        for r, K in [(0.1, b), (0.6, a)]:
            res = laplacian_residual(lambda x: family_u(p, x), alpha, K, r)
            assert abs(res) <= 1e-4 * r ** (2 * alpha) * K * math.exp(family_u(p, r))

    @pytest.mark.parametrize("alpha, a, b", TRIPLES)
    def test_continuous_at_kink(self, alpha: float, a: float, b: float) -> None:
        p = BubbleParams(alpha, a, b, 8.0)
        eps = 1e-9
        assert family_u(p, 0.125 - eps) == pytest.approx(family_u(p, 0.125 + eps), abs=1e-7)
        assert family_du(p, 0.125 - eps) == pytest.approx(family_du(p, 0.125 + eps), rel=1e-6)

    def test_derivative(self) -> None:
        p = BubbleParams(-0.25, 1.0, 2.0, 3.0)
        r = np.array([0.1, 0.2, 0.5, 0.9])
        h = 1e-6
        fd = (family_u(p, r + h) - family_u(p, r - h)) / (2 * h)
        np.testing.assert_allclose(family_du(p, r), fd, rtol=1e-6)

    def test_center_value(self) -> None:
        p = BubbleParams(0.0, 1.0, 1.0, 10.0)
        assert family_u(p, 0.0) == pytest.approx(math.log(8) + 2 * math.log(10))
        assert family_du(p, 0.0) == 0.0

    def test_domain(self) -> None:
        p = BubbleParams(0.0, 1.0, 1.0, 10.0)
        with pytest.raises(OutOfDomainError):
            family_u(p, 1.5)
        assert np.isfinite(family_u(p, 1.5, extend=True))

    def test_potential(self) -> None:
        p = BubbleParams(0.0, 1.0, 4.0, 10.0)
        np.testing.assert_array_equal(family_K(p, np.array([0.0, 0.05, 0.1, 1.0])), [4.0, 4.0, 1.0, 1.0])

    @pytest.mark.parametrize("alpha, a, b", TRIPLES)
    def test_mass(self, alpha: float, a: float, b: float) -> None:
        n = 5.0
        p = BubbleParams(alpha, a, b, n)
        c = 4 * math.pi * (1 + alpha)
        assert family_mass(p, 1 / n) == pytest.approx(c)
        # the flux identity: mass inside r is -2 pi r u'(r)
        for r in [0.1, 0.7]:
            assert family_mass(p, r) == pytest.approx(-2 * math.pi * r * family_du(p, r), rel=1e-10)

    def test_profile(self) -> None:
        p = BubbleParams(-0.5, 1.0, 4.0, 20.0)
        profile = family_profile(p, n_nodes=401)
        assert len(profile) == 401
        assert 0.05 in profile.nodes
        assert profile.r_max == 1.0
        assert profile(0.0) == pytest.approx(family_u(p, 0.0))
        assert profile(0.3) == pytest.approx(family_u(p, 0.3), rel=1e-4)


class TestBubbles:
    @pytest.mark.parametrize("alpha, a, b", TRIPLES)
    def test_limit_is_first_member(self, alpha: float, a: float, b: float) -> None:
        r = np.array([0.0, 0.3, 1.0])
        np.testing.assert_allclose(limit_bubble(alpha, a, b, r), family_u(BubbleParams(alpha, a, b, 1.0), r))
        assert np.isfinite(limit_bubble(alpha, a, b, 100.0))

    def test_limit_derivative(self) -> None:
        r = np.array([0.5, 2.0, 30.0])
        h = 1e-6
        fd = (limit_bubble(-0.25, 1.0, 2.0, r + h) - limit_bubble(-0.25, 1.0, 2.0, r - h)) / (2 * h)
        np.testing.assert_allclose(limit_bubble_du(-0.25, 1.0, 2.0, r), fd, rtol=1e-6)

    @pytest.mark.parametrize("alpha, a, b", TRIPLES)
    def test_total_curvature(self, alpha: float, a: float, b: float) -> None:
        exact = 4 * math.pi * (1 + alpha) * (1 + math.sqrt(a / b))
        assert bubble_total_curvature(alpha, a, b) == pytest.approx(exact, rel=1e-8)
        assert bubble_mass(alpha, a, b, 1e12) == pytest.approx(exact, rel=1e-4)

    @pytest.mark.parametrize("alpha", [0.0, -0.25, -0.5, -0.75])
    def test_centered_bubble(self, alpha: float) -> None:
        b, M = 2.0, 1.5
        assert centered_bubble(alpha, b, M, 0.0) == M
        res = laplacian_residual(lambda x: centered_bubble(alpha, b, M, x), alpha, b, 0.4)
        assert abs(res) <= 1e-4 * 0.4 ** (2 * alpha) * b * math.exp(centered_bubble(alpha, b, M, 0.4))

    def test_half_mass_radius(self) -> None:
        # with this peak the unit circle encloses half the mass
        alpha, b = -0.5, 1.0
        M = math.log(8 * (1 + alpha) ** 2 / b)
        np.testing.assert_allclose(
            centered_bubble(alpha, b, M, np.array([0.0, 1.0, 3.0])), limit_bubble(alpha, b, b, np.array([0.0, 1.0, 3.0]))
        )


class TestSupInf:
    def test_approaches_log_64(self) -> None:
        values = [supinf_combination(BubbleParams(0.0, 1.0, 1.0, n)) for n in [10.0, 1e3, 1e6]]
        assert np.all(np.diff(values) > 0)
        assert values[-1] == pytest.approx(math.log(64), abs=1e-3)
        assert supinf_bound(0.0, 1.0, 1.0) == pytest.approx(math.log(64))

    def test_singular_bound(self) -> None:
        assert supinf_bound(-0.5, 1.0, 4.0) == pytest.approx(1.5 * math.log(0.5))

    @settings(max_examples=50, deadline=None)
    @given(
        alpha=st.floats(-0.9, 0.0),
        a=st.floats(0.1, 10.0),
        ratio=st.floats(1.0, 10.0),
        n=st.floats(1.0, 1e6),
    )
    def test_bounded_and_monotone(self, alpha: float, a: float, ratio: float, n: float) -> None:
        b = a * ratio
        value = supinf_combination(BubbleParams(alpha, a, b, n))
        assert value <= supinf_bound(alpha, a, b) + 1e-12
        assert supinf_combination(BubbleParams(alpha, a, b, 2 * n)) >= value - 1e-12
