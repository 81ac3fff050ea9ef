"""
Blow-up diagnostics of concentrating solutions.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from liouvillelab import defaults
from liouvillelab.checks import parabolic_refine
from liouvillelab.core import (
    ConicalWeight,
    Disk,
    GridField,
    RadialProfile,
    circle_samples,
    disk_weighted_integral,
)
from liouvillelab.exceptions import (
    BoundaryMaxWarning,
    InsufficientTailError,
    InvalidCaseError,
    NumericalError,
    OutOfDomainError,
)
from liouvillelab.potential import ConstantPotential, PotentialSpec, RadialPotential
from liouvillelab.solvers import radial_mass

__all__ = [
    "BlowupReport",
    "DecayAudit",
    "blowup_scales",
    "rescale",
    "rescale_jacobian",
    "blowup_weight",
    "critical_radius",
    "subcase_classify",
    "circle_max_profile",
    "decay_audit",
    "local_mass",
    "sharpness_test",
    "annulus_mass",
    "analyze_blowup",
]

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
Potential = Union[PotentialSpec, Callable[[np.ndarray, np.ndarray], np.ndarray]]
Rescaled = Union[GridField, RadialProfile]


@dataclass(frozen=True)
class BlowupReport:
    """
    Scales and masses describing a peak of a solution.

    Attributes
    ----------
    M : float
        Peak value over the compact set.
    x_star : tuple[float, float]
        Peak location.
    delta : float
        ``exp(-M / (2 (1 + alpha)))``.
    tau : float or None
        ``delta^(1 + alpha) / |x_star|^alpha``; ``None`` when undefined.
    ratio_delta : float
        ``|x_star| / delta``.
    case_tag : {"I", "II"}
        ``"I"`` iff ``ratio_delta <= case_threshold``.
    L_n : float
        ``rho / tau`` in case II, ``rho / delta`` in case I.
    alpha, rho : float
    p_n : float
        Mean of ``u`` on the circle of radius ``rho`` about ``x_star``.
    subcase_tag : {"i", "ii", "n/a"}
    l_n : float, optional
        Critical radius.
    mass_at_l : float, optional
        Rescaled mass within ``l_n``.
    neck_mass : float, optional
        Rescaled mass between ``r_bar / 4`` and ``4 l_n``.
    r_hat : float, optional
        ``(tau / |x_star|) l_n``.
    sharp_ratio : float, optional
        ``log(|x_star| / tau) / |log tau|``.
    r_bar : float, optional
        Inner radius of the neck region.
    r_bar_constant : float, optional
        ``log(r_bar)^2 / log(|x_star| / tau)``.
    """

    M: float
    x_star: Point
    delta: float
    tau: Optional[float]
    ratio_delta: float
    case_tag: str
    L_n: float
    alpha: float
    rho: float
    p_n: float = math.nan
    subcase_tag: str = "n/a"
    l_n: Optional[float] = None
    mass_at_l: Optional[float] = None
    neck_mass: Optional[float] = None
    r_hat: Optional[float] = None
    sharp_ratio: Optional[float] = None
    r_bar: Optional[float] = None
    r_bar_constant: Optional[float] = None

    @property
    def scale(self) -> float:
        """
        Blow-up length: ``tau`` in case II, ``delta`` in case I.
        """
        if self.case_tag == "II" and self.tau is not None:
            return self.tau
        return self.delta

    @property
    def distance(self) -> float:
        return math.hypot(*self.x_star)

    def to_series(self) -> pd.Series:
        row = dataclasses.asdict(self)
        row["x_star_x"], row["x_star_y"] = row.pop("x_star")
        return pd.Series(row)


def _grid_argmax(field: GridField, region: np.ndarray) -> Tuple[int, int]:
    vals = np.where(region, field.values, -np.inf)
    top = np.max(vals)
    ii, jj = np.nonzero(vals == top)
    X, Y = field.coordinates
    k = int(np.argmax(np.hypot(X[ii, jj], Y[ii, jj])))
    return int(ii[k]), int(jj[k])


def _circle_mean(field: GridField, center: Point, radius: float, n_angles: int) -> float:
    ux, uy = circle_samples(n_angles)
    vals = field.sample(center[0] + radius * ux, center[1] + radius * uy)
    return float(np.mean(vals)) if np.all(np.isfinite(vals)) else math.nan


def _scales(M: float, x_star: Point, alpha: float, rho: float, case_threshold: float) -> BlowupReport:
    delta = math.exp(-M / (2.0 * (1.0 + alpha)))
    dist = math.hypot(*x_star)
    if alpha == 0:
        tau: Optional[float] = delta
    elif dist > 0:
        tau = delta ** (1.0 + alpha) / dist**alpha
    else:
        tau = None
    ratio = dist / delta
    case = "I" if ratio <= case_threshold else "II"
    L_n = rho / tau if case == "II" and tau is not None else rho / delta
    return BlowupReport(M, x_star, delta, tau, ratio, case, L_n, alpha, rho)


def blowup_scales(
    field: GridField,
    A: Disk,
    alpha: float,
    rho: float,
    case_threshold: float = defaults.case_threshold,
    *,
    n_angles: int = defaults.n_angles,
) -> BlowupReport:
    """
    Peak data and blow-up scales of a field over a compact disk.

    The grid maximum over ``A`` (ties broken by the largest ``|x|``) is
    refined by a separable parabola on the 3x3 stencil.

    Parameters
    ----------
    field : GridField
        Solution.
    A : Disk
        Compact set; ``A`` grown by ``rho`` must lie in the domain.
    alpha : float
        Exponent of the weight.
    rho : float
        Radius of the blow-up neighbourhood.
    case_threshold : float
        Case (I) threshold on ``|x_star| / delta``.

    Warns
    -----
    BoundaryMaxWarning
        If the maximum lies within one grid cell of the boundary of ``A``.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    cx, cy = A.center
    reach = math.hypot(cx, cy) if field.domain == "disk" else max(abs(cx), abs(cy))
    if reach + A.radius + rho > field.extent * (1.0 + 1e-12):
        raise OutOfDomainError(f"{A} grown by rho={rho} leaves the domain of {field!r}")
    X, Y = field.coordinates
    region = field.mask & (np.hypot(X - cx, Y - cy) <= A.radius)
    if not np.any(region):
        raise OutOfDomainError(f"No grid nodes inside {A}")
    i, j = _grid_argmax(field, region)
    M, x_star = parabolic_refine(field, i, j, maximum=True)
    if math.hypot(X[i, j] - cx, Y[i, j] - cy) >= A.radius - field.spacing:
        warnings.warn(f"Maximum at {x_star} lies on the boundary of {A}", BoundaryMaxWarning, stacklevel=2)
    report = dataclasses.replace(
        _scales(M, x_star, alpha, rho, case_threshold), p_n=_circle_mean(field, x_star, rho, n_angles)
    )
    logger.info("peak M=%.8g at %s: delta=%.4g tau=%s case %s", M, x_star, report.delta, report.tau, report.case_tag)
    return report


def rescale(
    field: GridField,
    x_star: Point,
    scale: float,
    *,
    n: Optional[int] = None,
    extent: Optional[float] = None,
    M: Optional[float] = None,
) -> GridField:
    """
    ``v(y) = u(x_star + scale y) - M`` on a fresh disk grid.

    Parameters
    ----------
    field : GridField
        Field to rescale.
    x_star : tuple[float, float]
        Peak location; becomes the origin.
    scale : float
        Length scale.
    n : int, optional
        Samples per axis, made odd so the origin is a node.
    extent : float, optional
        Radius of the rescaled window; defaults to the largest window inside
        the domain, less two grid cells.
    M : float, optional
        Subtracted value; defaults to ``u(x_star)`` so that ``v(0) = 0``.

    Raises
    ------
    OutOfDomainError
        If the window leaves the domain.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    reach = math.hypot(*x_star) if field.domain == "disk" else max(abs(x_star[0]), abs(x_star[1]))
    room = field.extent - reach - 2.0 * field.spacing
    if room <= 0:
        raise OutOfDomainError(f"x_star={x_star} is too close to the domain boundary")
    max_extent = room / scale
    if extent is None:
        extent = max_extent
    elif extent > max_extent * (1.0 + 1e-12):
        raise OutOfDomainError(f"Window of radius {extent} at scale {scale} leaves the domain (max {max_extent})")
    n = field.n if n is None else n
    n = n if n % 2 == 1 else n + 1
    if M is None:
        M = float(field.sample(x_star[0], x_star[1]))
    x = np.linspace(-extent, extent, n)
    Y_, X_ = np.meshgrid(x, x, indexing="ij")
    values = field.sample(x_star[0] + scale * X_, x_star[1] + scale * Y_) - M
    return GridField(values, extent, domain="disk", alpha=field.alpha)


def rescale_jacobian(M: float, scale: float, alpha: float) -> float:
    """
    Factor ``e^M scale^(2 + 2 alpha)`` relating weighted masses before and after rescaling.

    The blow-up scales make it 1: ``int |x|^(2 alpha) K e^u dx`` over the
    window equals the rescaled integral against :func:`blowup_weight`.
    """
    return math.exp(M) * scale ** (2.0 + 2.0 * alpha)


def blowup_weight(report: BlowupReport) -> ConicalWeight:
    """
    The weight in rescaled coordinates, normalized so that masses are preserved.

    Case II: ``|(tau / |x_star|) y + x_star / |x_star||^(2 alpha)``, a cone
    at ``-x_star / tau`` with scale ``tau / |x_star|``. Case I:
    ``|y + x_star / delta|^(2 alpha)``.
    """
    lam = report.scale
    center = (-report.x_star[0] / lam, -report.x_star[1] / lam)
    if report.case_tag == "II" and report.alpha != 0:
        return ConicalWeight(report.alpha, center, lam / report.distance)
    return ConicalWeight(report.alpha, center)


def rescaled_potential(K: Potential, x_star: Point, scale: float) -> Potential:
    """
    ``K(x_star + scale y)`` in rescaled coordinates.

    Constant and centered radial potentials stay `PotentialSpec` instances.
    """
    if isinstance(K, ConstantPotential):
        return K
    if isinstance(K, RadialPotential) and K.center == (0.0, 0.0) and tuple(x_star) == (0.0, 0.0):
        return RadialPotential(
            np.asarray(K.breakpoints) / scale, K.values, a=K.a, b=K.b, sigma_bar=K.sigma_bar, B=K.B, rho_bar=K.rho_bar
        )

    def shifted(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
        return np.asarray(K(x_star[0] + scale * np.asarray(y1), x_star[1] + scale * np.asarray(y2)))

    return shifted


def _mass_function(v: Rescaled, weight: ConicalWeight, K: Potential) -> Tuple[Callable[[float], float], float]:
    """
    ``l -> int_{|y| <= l} weight K e^v`` and the largest admissible ``l``.
    """
    if isinstance(v, RadialProfile):
        if not isinstance(K, PotentialSpec) or not K.is_radial:
            raise ValueError("Radial profiles need a radial PotentialSpec")
        if weight.center != (0.0, 0.0) or weight.prefactor != 1.0 or weight.alpha != v.alpha:
            raise ValueError("Radial profiles need the unscaled weight centered at the origin")
        profile = v
        return (lambda l: float(radial_mass(profile, K, l))), profile.r_max

    field = v

    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.asarray(K(x, y)) * np.exp(field.sample(x, y))

    def mass(l: float) -> float:
        if l <= 0:
            return 0.0
        return disk_weighted_integral(Disk((0.0, 0.0), l), weight, integrand)

    return mass, field.extent * (1.0 - 1e-9)


def critical_radius(
    v: Rescaled,
    weight: ConicalWeight,
    K: Potential,
    sigma_bar: float,
    L_n: float,
    *,
    threshold: Optional[float] = None,
    rtol: float = 1e-6,
    max_iter: int = 200,
) -> Tuple[float, float]:
    """
    ``l_n = sup{l <= L_n : int_{|y| <= l} weight K e^v <= threshold}``.

    Parameters
    ----------
    v : GridField or RadialProfile
        Rescaled field.
    weight : ConicalWeight
        Weight in rescaled coordinates.
    K : PotentialSpec or callable
        Potential in rescaled coordinates.
    sigma_bar : float
        Oscillation constant; the threshold defaults to ``4 pi (1 + 1/sqrt(sigma_bar))``.
    L_n : float
        Upper limit.

    Returns
    -------
    l_n : float
        ``L_n`` when the threshold is never reached.
    mass_at_l : float
        Mass within ``l_n`` (within the window, if ``l_n`` exceeds it).
    """
    if not sigma_bar >= 1:
        raise ValueError(f"sigma_bar must be at least 1, got {sigma_bar}")
    if threshold is None:
        threshold = 4.0 * math.pi * (1.0 + 1.0 / math.sqrt(sigma_bar))
    mass, window = _mass_function(v, weight, K)
    top = min(L_n, window)
    if top < L_n:
        logger.info("critical radius: window %.4g is smaller than L_n=%.4g", window, L_n)
    m_top = mass(top)
    if m_top <= threshold:
        return L_n, m_top
    lo, hi = 0.0, top
    m_lo = 0.0
    for _ in range(max_iter):
        if hi - lo <= rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        m_mid = mass(mid)
        logger.debug("critical radius bisection: l=%.10g mass=%.10g", mid, m_mid)
        if m_mid <= threshold:
            lo, m_lo = mid, m_mid
        else:
            hi = mid
    return lo, m_lo


def subcase_classify(
    l_n: float,
    x_star: Point,
    tau: Optional[float],
    epsilon0: float = defaults.epsilon0,
    *,
    case_tag: Optional[str] = None,
) -> str:
    """
    ``"i"`` if ``epsilon0 * l_n <= |x_star| / tau``, else ``"ii"``.

    Raises
    ------
    InvalidCaseError
        In case I, or when ``tau`` is undefined.
    """
    if case_tag == "I" or tau is None:
        raise InvalidCaseError("Subcases are defined in case II only")
    return "i" if epsilon0 * l_n <= math.hypot(*x_star) / tau else "ii"


def circle_max_profile(
    field: GridField,
    radii: Sequence[float],
    *,
    center: Point = (0.0, 0.0),
    n_angles: int = defaults.n_angles,
) -> Tuple[RadialProfile, RadialProfile]:
    """
    Maximum and mean of a field on circles about ``center``.

    Returns
    -------
    circle_max, circle_mean : RadialProfile

    Raises
    ------
    OutOfDomainError
        If a circle leaves the region where the field is defined.
    """
    r = np.asarray(radii, dtype=float)
    ux, uy = circle_samples(n_angles)
    vals = field.sample(center[0] + r[:, None] * ux[None, :], center[1] + r[:, None] * uy[None, :])
    if not np.all(np.isfinite(vals)):
        raise OutOfDomainError("A circle leaves the region where the field is defined")
    return (
        RadialProfile(r, np.max(vals, axis=1), alpha=field.alpha),
        RadialProfile(r, np.mean(vals, axis=1), alpha=field.alpha),
    )


@dataclass(frozen=True, eq=False)
class DecayAudit:
    """
    Decay of a rescaled solution over a range of radii.

    Attributes
    ----------
    radii : numpy.ndarray
    circle_max, circle_mean : numpy.ndarray
    slope : float
        Least-squares slope of the circle maximum against ``log r``.
    bound_constant : float
        Smallest ``C`` with ``max v <= -2 log r - 2 alpha log(1 + 3/2 q r) + C``
        over the range, ``q = tau / |x_star|``.
    mean_constant : float
        Largest ``C`` with ``mean v >= -2 (1 + 1/sqrt(sigma_bar)) log r + C``.
    tail_exponent : float or None
        Fitted exponent of the mass outside radius ``r``, if a potential was given.
    """

    radii: np.ndarray
    circle_max: np.ndarray
    circle_mean: np.ndarray
    slope: float
    bound_constant: float
    mean_constant: float
    tail_exponent: Optional[float] = None

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({"r": self.radii, "circle_max": self.circle_max, "circle_mean": self.circle_mean})


def decay_audit(
    v: Rescaled,
    sigma_bar: float,
    r_range: Tuple[float, float],
    *,
    K: Optional[Potential] = None,
    weight: Optional[ConicalWeight] = None,
    tau_over_x: float = 0.0,
    n_radii: int = 64,
    n_angles: int = defaults.n_angles,
    min_ratio: float = defaults.min_decay_ratio,
) -> DecayAudit:
    """
    Fit the decay of a rescaled solution on ``r_range``.

    Raises
    ------
    InsufficientTailError
        If ``r_range`` spans less than a factor ``min_ratio``.
    """
    r_lo, r_hi = float(r_range[0]), float(r_range[1])
    if not (0 < r_lo < r_hi) or r_hi / r_lo < min_ratio:
        raise InsufficientTailError(f"Radius range [{r_lo}, {r_hi}] spans less than a factor {min_ratio}")
    radii = np.geomspace(r_lo, r_hi, n_radii)
    alpha = v.alpha
    if isinstance(v, RadialProfile):
        if r_hi > v.r_max:
            raise OutOfDomainError(f"Radius {r_hi} beyond the profile ({v.r_max})")
        cmax = cmean = np.asarray(v(radii))
    else:
        pmax, pmean = circle_max_profile(v, radii, n_angles=n_angles)
        cmax, cmean = pmax.values, pmean.values
    logr = np.log(radii)
    slope = float(np.polyfit(logr, cmax, 1)[0])
    bound = float(np.max(cmax + 2.0 * logr + 2.0 * alpha * np.log1p(1.5 * tau_over_x * radii)))
    mean_constant = float(np.min(cmean + 2.0 * (1.0 + 1.0 / math.sqrt(sigma_bar)) * logr))

    tail_exponent = None
    if K is not None:
        weight = ConicalWeight(alpha) if weight is None else weight
        mass, window = _mass_function(v, weight, K)
        r_end = min(window, 4.0 * r_hi)
        total = mass(r_end)
        tail = np.array([total - mass(float(r)) for r in radii])
        ok = (tail > 0) & (radii < r_end)
        if np.count_nonzero(ok) >= 4:
            tail_exponent = -float(np.polyfit(logr[ok], np.log(tail[ok]), 1)[0])
    audit = DecayAudit(radii, cmax, cmean, slope, bound, mean_constant, tail_exponent)
    logger.info("decay audit on [%.4g, %.4g]: slope %.4f", r_lo, r_hi, slope)
    return audit


def local_mass(field: GridField, x_star: Point, rho: float, weight: ConicalWeight, K: Potential) -> float:
    """
    ``int_{|x - x_star| <= rho} weight K e^u``.
    """

    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.asarray(K(x, y)) * np.exp(field.sample(x, y))

    return disk_weighted_integral(Disk((float(x_star[0]), float(x_star[1])), rho), weight, integrand)


def sharpness_test(
    field: GridField,
    x_star: Point,
    rho: float,
    weight: ConicalWeight,
    K: Potential,
    sigma_bar: float,
    *,
    threshold: Optional[float] = None,
) -> bool:
    """
    Whether the local mass reaches ``4 pi (1 + 1/sqrt(sigma_bar))``.

    Solutions passing the test satisfy the sup + inf inequality with the
    optimal ``sigma = sigma_bar``.
    """
    if threshold is None:
        threshold = 4.0 * math.pi * (1.0 + 1.0 / math.sqrt(sigma_bar))
    return local_mass(field, x_star, rho, weight, K) >= threshold


def annulus_mass(v: Rescaled, weight: ConicalWeight, K: Potential, r_inner: float, r_outer: float) -> float:
    """
    Mass of ``weight K e^v`` between two radii about the origin.

    The outer radius is clipped to the window on which ``v`` is known.
    """
    mass, window = _mass_function(v, weight, K)
    r_outer = min(r_outer, window)
    if r_inner >= r_outer:
        return 0.0
    return mass(r_outer) - mass(max(r_inner, 0.0))


def _rescaled_profile(profile: RadialProfile, scale: float) -> RadialProfile:
    M = float(profile.values[0])
    derivs = None if profile.derivatives is None else profile.derivatives * scale
    return RadialProfile(profile.nodes / scale, profile.values - M, alpha=profile.alpha, derivatives=derivs)


def analyze_blowup(
    source: Rescaled,
    alpha: float,
    rho: float,
    K: Potential,
    *,
    A: Optional[Disk] = None,
    sigma_bar: Optional[float] = None,
    case_threshold: float = defaults.case_threshold,
    epsilon0: float = defaults.epsilon0,
) -> Tuple[BlowupReport, Rescaled]:
    """
    Fill every field of a `BlowupReport`.

    Parameters
    ----------
    source : GridField or RadialProfile
        The solution. A radial profile peaks at the origin, so it is always
        in case I.
    alpha : float
        Exponent of the weight.
    rho : float
        Radius of the blow-up neighbourhood.
    K : PotentialSpec or callable
        Potential in the original coordinates.
    A : Disk, optional
        Compact set for the peak search (grids only); defaults to the disk of
        radius ``extent - rho - h``.
    sigma_bar : float, optional
        Defaults to ``K.sigma_bar``.

    Returns
    -------
    report : BlowupReport
    v : GridField or RadialProfile
        The rescaled solution.
    """
    if sigma_bar is None:
        if not isinstance(K, PotentialSpec):
            raise ValueError("sigma_bar is required for callable potentials")
        sigma_bar = K.sigma_bar
    if isinstance(source, RadialProfile):
        if rho > source.r_max:
            raise OutOfDomainError(f"rho={rho} beyond the profile ({source.r_max})")
        M = float(source.values[0])
        report = dataclasses.replace(
            _scales(M, (0.0, 0.0), alpha, rho, case_threshold), p_n=float(source(rho))
        )
        v: Rescaled = _rescaled_profile(source, report.scale)
    else:
        if A is None:
            A = Disk((0.0, 0.0), source.extent - rho - source.spacing)
        report = blowup_scales(source, A, alpha, rho, case_threshold)
        v = rescale(source, report.x_star, report.scale, M=report.M)
    weight = blowup_weight(report)
    K_v = rescaled_potential(K, report.x_star, report.scale)
    l_n, mass_at_l = critical_radius(v, weight, K_v, sigma_bar, report.L_n)

    fields = {"l_n": l_n, "mass_at_l": mass_at_l}
    if report.case_tag == "II":
        if report.tau is None:
            raise NumericalError(f"Case II report without tau: {report}")
        log_ratio = math.log(report.distance / report.tau)
        fields["subcase_tag"] = subcase_classify(l_n, report.x_star, report.tau, epsilon0, case_tag="II")
        fields["r_hat"] = report.tau / report.distance * l_n
        fields["sharp_ratio"] = log_ratio / abs(math.log(report.tau))
        r_bar = math.exp(math.sqrt(max(log_ratio, 0.0)))
        fields["r_bar_constant"] = math.log(r_bar) ** 2 / log_ratio if log_ratio > 0 else None
        logger.info("neck radius r_bar=%.4g, implied constant %s", r_bar, fields["r_bar_constant"])
    else:
        r_bar = math.sqrt(l_n)
    fields["r_bar"] = r_bar
    fields["neck_mass"] = annulus_mass(v, weight, K_v, r_bar / 4.0, 4.0 * l_n)
    report = dataclasses.replace(report, **fields)  # type: ignore[arg-type]
    logger.info("blow-up report: %s", report)
    return report, v
