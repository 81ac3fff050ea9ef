import math

import numpy as np
import pytest

from liouvillelab.blowup import (
    analyze_blowup,
    blowup_scales,
    blowup_weight,
    critical_radius,
    decay_audit,
    local_mass,
    rescale,
    rescale_jacobian,
    sharpness_test,
    subcase_classify,
)
from liouvillelab.closed_form import centered_bubble
from liouvillelab.core import ConicalWeight, Disk, GridField, RadialProfile
from liouvillelab.exceptions import (
    BoundaryMaxWarning,
    InsufficientTailError,
    InvalidCaseError,
    OutOfDomainError,
)
from liouvillelab.potential import ConstantPotential
from liouvillelab.sample_data import bubble_field
from liouvillelab.solvers import RadialIVP, solve_radial


def standard_mass(l: float) -> float:
    """
    Mass of ``e^v`` within ``l`` for ``v = -2 log(1 + |y|^2 / 8)``.
    """
    q = l**2 / 8
    return 8 * math.pi * q / (1 + q)


@pytest.fixture(scope="module")
def centered() -> GridField:
    return bubble_field(0.0, 1.0, 3.0)


@pytest.fixture(scope="module")
def off_center() -> GridField:
    return bubble_field(0.0, 1.0, 6.0, center=(0.5, 0.0))


@pytest.fixture(scope="module")
def standard() -> RadialProfile:
    r = np.linspace(0.0, 200.0, 20001)
    return RadialProfile(r, centered_bubble(0.0, 1.0, 0.0, r))


class TestScales:
    def test_case_one(self, centered: GridField) -> None:
        report = blowup_scales(centered, Disk((0.0, 0.0), 0.5), 0.0, 0.3)
        assert report.M == pytest.approx(3.0)
        assert report.x_star == pytest.approx((0.0, 0.0))
        assert report.delta == pytest.approx(math.exp(-1.5))
        assert report.tau == report.delta
        assert report.case_tag == "I"
        assert report.L_n == pytest.approx(0.3 / report.delta)
        assert report.p_n == pytest.approx(centered_bubble(0.0, 1.0, 3.0, 0.3), rel=1e-3)

    def test_case_two(self, off_center: GridField) -> None:
        alpha = -0.5
        report = blowup_scales(off_center, Disk((0.0, 0.0), 0.9), alpha, 0.05)
        assert report.x_star == pytest.approx((0.5, 0.0))
        assert report.delta == pytest.approx(math.exp(-6.0))
        assert report.case_tag == "II"
        assert report.ratio_delta > 10
        assert report.tau == pytest.approx(report.delta ** (1 + alpha) * 0.5 ** (-alpha))
        assert report.scale == report.tau
        assert report.L_n == pytest.approx(0.05 / report.tau)
        series = report.to_series()
        assert series["x_star_x"] == pytest.approx(0.5)
        assert series["case_tag"] == "II"

    def test_threshold_moves_case(self, off_center: GridField) -> None:
        report = blowup_scales(off_center, Disk((0.0, 0.0), 0.9), -0.5, 0.05, case_threshold=1e6)
        assert report.case_tag == "I"
        assert report.scale == report.delta

    def test_boundary_max(self, off_center: GridField) -> None:
        with pytest.warns(BoundaryMaxWarning):
            blowup_scales(off_center, Disk((0.2, 0.0), 0.3), 0.0, 0.05)

    def test_invalid(self, centered: GridField) -> None:
        with pytest.raises(ValueError, match="rho"):
            blowup_scales(centered, Disk((0.0, 0.0), 0.5), 0.0, 0.0)
        with pytest.raises(OutOfDomainError):
            blowup_scales(centered, Disk((0.0, 0.0), 0.8), 0.0, 0.3)


class TestRescale:
    def test_standard_bubble(self, centered: GridField) -> None:
        lam = math.exp(-1.5)
        v = rescale(centered, (0.0, 0.0), lam, n=65, extent=4.0)
        assert v.n == 65
        assert v.values[32, 32] == pytest.approx(0.0, abs=1e-12)
        assert float(v.sample(2.0, 0.0)) == pytest.approx(-2 * math.log(1.5), abs=1e-3)

    def test_window(self, centered: GridField) -> None:
        with pytest.raises(OutOfDomainError, match="leaves the domain"):
            rescale(centered, (0.0, 0.0), 0.1, extent=20.0)
        with pytest.raises(ValueError, match="scale"):
            rescale(centered, (0.0, 0.0), 0.0)

    @pytest.mark.parametrize("alpha", [0.0, -0.5, -0.8])
    def test_jacobian(self, alpha: float) -> None:
        M = 7.0
        assert rescale_jacobian(M, math.exp(-M / (2 + 2 * alpha)), alpha) == pytest.approx(1.0, rel=1e-12)

    def test_weight_is_normalized(self, off_center: GridField) -> None:
        report = blowup_scales(off_center, Disk((0.0, 0.0), 0.9), -0.5, 0.05)
        w = blowup_weight(report)
        assert w.center == pytest.approx((-0.5 / report.tau, 0.0))
        assert float(w(0.0, 0.0)) == pytest.approx(1.0)


class TestCriticalRadius:
    def test_bisection(self, standard: RadialProfile) -> None:
        l_n, mass = critical_radius(
            standard, ConicalWeight(0.0), ConstantPotential(1.0), 1.0, 40.0, threshold=math.pi
        )
        assert l_n == pytest.approx(math.sqrt(8 / 7), rel=1e-3)
        assert mass == pytest.approx(math.pi, rel=1e-3)

    def test_threshold_not_reached(self, standard: RadialProfile) -> None:
        l_n, mass = critical_radius(standard, ConicalWeight(0.0), ConstantPotential(1.0), 1.0, 40.0)
        assert l_n == 40.0
        assert mass == pytest.approx(standard_mass(40.0), rel=1e-4)

    def test_sigma_bar(self, standard: RadialProfile) -> None:
        with pytest.raises(ValueError, match="sigma_bar"):
            critical_radius(standard, ConicalWeight(0.0), ConstantPotential(1.0), 0.5, 40.0)


class TestSubcase:
    def test_tags(self) -> None:
        assert subcase_classify(10.0, (1.0, 0.0), 0.5) == "i"
        assert subcase_classify(100.0, (1.0, 0.0), 0.5) == "ii"

    def test_case_one(self) -> None:
        with pytest.raises(InvalidCaseError):
            subcase_classify(10.0, (1.0, 0.0), 0.5, case_tag="I")
        with pytest.raises(InvalidCaseError):
            subcase_classify(10.0, (0.0, 0.0), None)


class TestDecay:
    def test_standard_bubble(self, standard: RadialProfile) -> None:
        audit = decay_audit(standard, 1.0, (10.0, 100.0), K=ConstantPotential(1.0))
        assert -4.0 < audit.slope < -3.5
        assert audit.tail_exponent > 1.5
        assert len(audit.to_dataframe()) == 64

    def test_short_range(self, standard: RadialProfile) -> None:
        with pytest.raises(InsufficientTailError):
            decay_audit(standard, 1.0, (10.0, 20.0))

    def test_beyond_profile(self, standard: RadialProfile) -> None:
        with pytest.raises(OutOfDomainError):
            decay_audit(standard, 1.0, (50.0, 500.0))


def test_local_mass(centered: GridField) -> None:
    K = ConstantPotential(1.0)
    y = math.exp(3.0) / 8
    exact = 8 * math.pi * y * 0.25 / (1 + y * 0.25)
    mass = local_mass(centered, (0.0, 0.0), 0.5, ConicalWeight(0.0), K)
    assert mass == pytest.approx(exact, rel=1e-3)
    assert not sharpness_test(centered, (0.0, 0.0), 0.5, ConicalWeight(0.0), K, 1.0)
    assert sharpness_test(centered, (0.0, 0.0), 0.5, ConicalWeight(0.0), K, 1.0, threshold=0.9 * exact)


class TestAnalyze:
    def test_radial(self) -> None:
        K = ConstantPotential(1.0)
        source = solve_radial(RadialIVP(0.0, K, 8.0, 1.0))
        report, v = analyze_blowup(source, 0.0, 0.5, K)
        assert report.case_tag == "I"
        assert report.subcase_tag == "n/a"
        assert report.M == 8.0
        assert report.p_n == pytest.approx(float(source(0.5)))
        assert v.values[0] == 0.0
        # the mass never reaches 8 pi, so l_n is the whole neighbourhood
        assert report.l_n == pytest.approx(report.L_n)
        assert report.mass_at_l == pytest.approx(standard_mass(report.L_n), rel=1e-3)
        assert report.r_bar == pytest.approx(math.sqrt(report.l_n))
        assert report.neck_mass > 0

    def test_case_two(self, off_center: GridField) -> None:
        report, v = analyze_blowup(
            off_center, -0.5, 0.05, ConstantPotential(1.0), A=Disk((0.5, 0.0), 0.2)
        )
        assert report.case_tag == "II"
        assert report.subcase_tag == "i"
        assert 0 < report.l_n <= report.L_n
        assert report.r_hat == pytest.approx(report.tau / 0.5 * report.l_n)
        assert report.sharp_ratio == pytest.approx(math.log(0.5 / report.tau) / abs(math.log(report.tau)))
        assert float(v.sample(0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_subtracts_refined_peak(self) -> None:
        field = bubble_field(0.0, 1.0, 6.0, center=(0.505, 0.0))
        report, v = analyze_blowup(field, -0.5, 0.05, ConstantPotential(1.0), A=Disk((0.5, 0.0), 0.2))
        assert report.M > np.nanmax(field.values)
        expected = float(field.sample(*report.x_star)) - report.M
        assert float(v.sample(0.0, 0.0)) == pytest.approx(expected, abs=1e-9)

    def test_callable_needs_sigma_bar(self, centered: GridField) -> None:
        with pytest.raises(ValueError, match="sigma_bar"):
            analyze_blowup(centered, 0.0, 0.3, lambda x, y: np.ones_like(x))
