"""
Weighted symmetric decreasing rearrangement and the audits built on it.

Superlevel sets ``{u > t}`` are extracted with marching squares and measured
exactly as polygons, so every quantity below shares the same piecewise linear
level-set geometry.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import least_squares
from skimage import measure

from liouvillelab import defaults
from liouvillelab.checks import HuberAudit, huber_audit_from_parts
from liouvillelab.core import (
    Cell,
    ConicalWeight,
    Disk,
    GridField,
    RadialProfile,
    distance_to_polyline,
    dual_cell_weights,
    polygon_weighted_area,
    weighted_area,
    winding_number,
)
from liouvillelab.exceptions import (
    InconsistentDistributionError,
    InsufficientTailError,
    LevelRangeWarning,
    OutOfDomainError,
)
from liouvillelab.potential import ConstantPotential, PotentialSpec
from liouvillelab.solvers import radial_mass

__all__ = [
    "LevelContours",
    "DistributionData",
    "RearrangedProfile",
    "DifferentialInequalityReport",
    "TailFit",
    "level_ladder",
    "superlevel_contours",
    "distribution_function",
    "rearrange",
    "rearrange_radial",
    "audit_khat_bounds",
    "audit_differential_inequality",
    "integrated_bound_fit",
    "audit_huber_levels",
]

logger = logging.getLogger(__name__)

Point = Tuple[float, float]

# Padding below the level, large enough to pin contours to the outermost nodes.
_PAD_FACTOR = 1e9


@dataclass(frozen=True)
class LevelContours:
    """
    Boundary of a superlevel set ``{u > t}``.

    Every polyline is closed and has the superlevel set on its left, so outer
    boundaries run counter-clockwise and holes clockwise.
    """

    level: float
    polylines: List[np.ndarray]
    out_of_range: bool = False

    def __len__(self) -> int:
        return len(self.polylines)

    def winding(self, point: Point) -> int:
        """
        Number of times the boundary winds around a point (1 inside, 0 outside).
        """
        return sum(winding_number(p, point) for p in self.polylines)

    def encloses(self, point: Point) -> bool:
        """
        Whether any boundary component winds around the point; true for points
        inside the set or inside one of its holes.
        """
        return any(winding_number(p, point) != 0 for p in self.polylines)

    def distance(self, point: Point) -> float:
        if not self.polylines:
            return math.inf
        return min(distance_to_polyline(p, point) for p in self.polylines)


def _clip_mask(field: GridField, clip_radius: Optional[float], clip_center: Point) -> np.ndarray:
    mask = field.mask
    if clip_radius is not None:
        X, Y = field.coordinates
        mask = mask & (np.hypot(X - clip_center[0], Y - clip_center[1]) <= clip_radius)
    return mask


def _value_range(field: GridField, clip_radius: Optional[float], clip_center: Point) -> Tuple[float, float]:
    mask = _clip_mask(field, clip_radius, clip_center)
    if not np.any(mask):
        raise OutOfDomainError("The clipping disk holds no domain nodes")
    vals = field.values[mask]
    return float(np.min(vals)), float(np.max(vals))


def _level_function(field: GridField, t: float, clip_radius: Optional[float], clip_center: Point) -> np.ndarray:
    """
    ``min(u - t, distance to the boundary)``, padded by one negative ring.
    """
    X, Y = field.coordinates
    d = np.full(field.values.shape, np.inf)
    if field.domain == "disk":
        d = field.extent - np.hypot(X, Y)
    if clip_radius is not None:
        d = np.minimum(d, clip_radius - np.hypot(X - clip_center[0], Y - clip_center[1]))
    vals = field.values
    finite = np.isfinite(vals)
    g = np.where(finite, np.minimum(np.where(finite, vals, 0.0) - t, d), np.minimum(d, -field.spacing))
    big = _PAD_FACTOR * (1.0 + float(np.max(np.abs(g))))
    return np.pad(g, 1, constant_values=-big)


def _bilinear(g: np.ndarray, row: float, col: float) -> float:
    i = int(np.clip(np.floor(row), 0, g.shape[0] - 2))
    j = int(np.clip(np.floor(col), 0, g.shape[1] - 2))
    tr, tc = row - i, col - j
    return float(
        (1 - tr) * (1 - tc) * g[i, j] + (1 - tr) * tc * g[i, j + 1] + tr * (1 - tc) * g[i + 1, j] + tr * tc * g[i + 1, j + 1]
    )


def _high_side_sign(contours: Sequence[np.ndarray], g: np.ndarray) -> int:
    """
    +1 if the positive side of ``g`` lies left of the contours in (x, y).
    """
    longest = max(contours, key=len)
    seg = np.diff(longest, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    for k in np.argsort(lengths)[::-1][:16]:
        if lengths[k] == 0:
            break
        dr, dc = seg[k] / lengths[k]
        # x runs along columns and y along rows; the left normal of (dc, dr) is (-dr, dc)
        row = 0.5 * (longest[k, 0] + longest[k + 1, 0]) + 0.3 * dc
        col = 0.5 * (longest[k, 1] + longest[k + 1, 1]) - 0.3 * dr
        val = _bilinear(g, row, col)
        if abs(val) > 1e-14:
            return 1 if val > 0 else -1
    raise InconsistentDistributionError("Could not orient level set contours")


def _contours(field: GridField, t: float, clip_radius: Optional[float], clip_center: Point) -> List[np.ndarray]:
    g = _level_function(field, t, clip_radius, clip_center)
    raw = [c for c in measure.find_contours(g, 0.0) if len(c) >= 4]
    if not raw:
        return []
    sign = _high_side_sign(raw, g)
    h = field.spacing
    x0 = -field.extent
    polylines = []
    for c in raw:
        xy = np.column_stack([x0 + (c[:, 1] - 1.0) * h, x0 + (c[:, 0] - 1.0) * h])
        if not np.array_equal(xy[0], xy[-1]):
            xy = np.vstack([xy, xy[:1]])
        polylines.append(xy if sign > 0 else xy[::-1].copy())
    return polylines


def superlevel_contours(
    field: GridField,
    t: float,
    *,
    clip_radius: Optional[float] = None,
    clip_center: Point = (0.0, 0.0),
) -> LevelContours:
    """
    Boundary of ``{u > t}`` within the domain (and the clipping disk).

    Parameters
    ----------
    field : GridField
        Sampled field.
    t : float
        Level, strictly between the field's minimum and maximum.
    clip_radius : float, optional
        Radius of a clipping disk intersected with the superlevel set.
    clip_center : tuple[float, float]
        Center of the clipping disk.

    Returns
    -------
    LevelContours
        Empty, with ``out_of_range`` set, if ``t`` is outside the field range.
    """
    lo, hi = _value_range(field, clip_radius, clip_center)
    if not (lo < t < hi):
        warnings.warn(f"Level {t} outside the field range [{lo}, {hi}]", LevelRangeWarning, stacklevel=2)
        return LevelContours(float(t), [], out_of_range=True)
    return LevelContours(float(t), _contours(field, t, clip_radius, clip_center))


def _domain_measure(field: GridField, w: ConicalWeight, clip_radius: Optional[float], clip_center: Point) -> float:
    if clip_radius is not None:
        inside_disk = field.domain == "disk" and math.hypot(*clip_center) + clip_radius <= field.extent
        inside_square = field.domain == "square" and max(abs(clip_center[0]), abs(clip_center[1])) + clip_radius <= field.extent
        if inside_disk or inside_square:
            return weighted_area(Disk(clip_center, clip_radius), w)
        lo = _value_range(field, clip_radius, clip_center)[0]
        return sum(polygon_weighted_area(p, w) for p in _contours(field, lo - 1.0, clip_radius, clip_center))
    if field.domain == "disk":
        return weighted_area(Disk((0.0, 0.0), field.extent), w)
    e = field.extent
    return weighted_area(Cell(-e, -e, e, e), w, method="polar")


@dataclass(frozen=True, eq=False)
class DistributionData:
    """
    Sampled distribution function ``xi(t) = mu({u > t})``.

    Attributes
    ----------
    levels : numpy.ndarray
        Increasing levels.
    xi : numpy.ndarray
        Weighted measure of each superlevel set.
    weight : ConicalWeight
        The measure's weight.
    clip_radius : float or None
        Radius of the clipping disk.
    xi_K : numpy.ndarray or None
        ``int_{u > t} K dmu`` per level.
    center_inside : numpy.ndarray
        Whether the cone point lies in each superlevel set.
    center_near : numpy.ndarray
        Whether a level set passes within one grid cell of the cone point.
    max_level : float
        Largest node value in the clipped domain.
    total_measure : float
        Measure of the clipped domain.
    """

    levels: np.ndarray
    xi: np.ndarray
    weight: ConicalWeight
    clip_radius: Optional[float]
    xi_K: Optional[np.ndarray] = None
    center_inside: Optional[np.ndarray] = None
    center_near: Optional[np.ndarray] = None
    max_level: float = math.nan
    total_measure: float = math.nan

    @property
    def s(self) -> np.ndarray:
        """
        Measure radii ``(xi / pi)^(1/2)``.
        """
        return np.sqrt(self.xi / math.pi)

    def to_dataframe(self) -> pd.DataFrame:
        df = pd.DataFrame({"level": self.levels, "xi": self.xi, "s": self.s})
        if self.xi_K is not None:
            df["xi_K"] = self.xi_K
        if self.center_inside is not None:
            df["center_inside"] = self.center_inside
        return df


def level_ladder(
    field: GridField,
    n_levels: int,
    *,
    weight: Optional[ConicalWeight] = None,
    clip_radius: Optional[float] = None,
    clip_center: Point = (0.0, 0.0),
) -> np.ndarray:
    """
    Increasing levels that split the clipped domain into bands of roughly equal measure.

    Levels are weighted quantiles of the node values, using dual-cell
    weights, and lie strictly inside the field range.
    """
    if n_levels < 1:
        raise ValueError("n_levels must be positive")
    weight = ConicalWeight(field.alpha) if weight is None else weight
    mask = _clip_mask(field, clip_radius, clip_center)
    lo, hi = _value_range(field, clip_radius, clip_center)
    vals = field.values[mask]
    wts = dual_cell_weights(field, weight)[mask]
    order = np.argsort(vals)[::-1]
    cum = np.cumsum(wts[order])
    targets = cum[-1] * np.arange(1, n_levels + 1) / (n_levels + 1)
    levels = np.interp(targets, cum, vals[order])[::-1]
    eps = 1e-9 * (hi - lo)
    return np.unique(np.clip(levels, lo + eps, hi - eps))


def distribution_function(
    field: GridField,
    weight: ConicalWeight,
    levels: Sequence[float],
    clip_radius: Optional[float] = None,
    *,
    clip_center: Point = (0.0, 0.0),
    K: Optional[PotentialSpec] = None,
) -> DistributionData:
    """
    Weighted measure of the superlevel sets of a field.

    Parameters
    ----------
    field : GridField
        Sampled field.
    weight : ConicalWeight
        Weight of the measure.
    levels : sequence of float
        Levels; sorted into increasing order.
    clip_radius : float, optional
        Superlevel sets are intersected with this disk.
    clip_center : tuple[float, float]
        Center of the clipping disk.
    K : PotentialSpec, optional
        Also integrate ``K`` over each superlevel set.

    Returns
    -------
    DistributionData

    Raises
    ------
    InconsistentDistributionError
        If the sampled measure increases with the level by more than ``1e-6``
        of the domain measure.
    """
    t = np.sort(np.asarray(levels, dtype=float))
    lo, hi = _value_range(field, clip_radius, clip_center)
    total = _domain_measure(field, weight, clip_radius, clip_center)
    xi = np.zeros_like(t)
    xi_K = np.zeros_like(t) if K is not None else None
    inside = np.zeros(t.shape, dtype=bool)
    near = np.zeros(t.shape, dtype=bool)
    h = field.spacing
    domain_polys: Optional[List[np.ndarray]] = None
    for i, level in enumerate(t):
        if level >= hi:
            continue
        if level < lo:
            xi[i] = total
            if K is not None:
                if domain_polys is None:
                    domain_polys = _contours(field, lo - 1.0, clip_radius, clip_center)
                xi_K[i] = sum(K.polygon_mass(p, weight) for p in domain_polys)  # type: ignore[index]
            inside[i] = True
            continue
        contours = LevelContours(float(level), _contours(field, level, clip_radius, clip_center))
        xi[i] = sum(polygon_weighted_area(p, weight) for p in contours.polylines)
        if K is not None:
            xi_K[i] = sum(K.polygon_mass(p, weight) for p in contours.polylines)  # type: ignore[index]
        inside[i] = contours.winding(weight.center) > 0
        near[i] = contours.distance(weight.center) < h
    increase = np.diff(xi)
    if increase.size and np.max(increase) > 1e-6 * total:
        k = int(np.argmax(increase))
        raise InconsistentDistributionError(
            f"Distribution function increases from {xi[k]:.10g} to {xi[k + 1]:.10g} between levels {t[k]:.6g} and {t[k + 1]:.6g}"
        )
    logger.debug("distribution function at %d levels, total measure %.10g", len(t), total)
    return DistributionData(t, xi, weight, clip_radius, xi_K, inside, near, hi, total)


def _layer_cake(levels: np.ndarray, xi_K: np.ndarray, t_max: float) -> np.ndarray:
    """
    ``e^t xi_K(t) + int_t^t_max e^tau xi_K(tau) dtau`` with ``xi_K`` piecewise linear.
    """
    t = np.append(levels, t_max)
    f = np.append(xi_K, 0.0)
    t0, t1 = t[:-1], t[1:]
    f0, f1 = f[:-1], f[1:]
    dt = t1 - t0
    e0, e1 = np.exp(t0), np.exp(t1)
    de = e0 * np.expm1(dt)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_exp = np.where(dt > 0, de / dt, e0)
    pieces = f0 * de + (f1 - f0) * (e1 - mean_exp)
    tail = np.cumsum(pieces[::-1])[::-1]
    return np.exp(levels) * xi_K + tail


def _centered_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, np.nan)
    dn = num[2:] - num[:-2]
    dd = den[2:] - den[:-2]
    with np.errstate(invalid="ignore", divide="ignore"):
        out[1:-1] = np.where(dd != 0, dn / dd, np.nan)
    return out


@dataclass(frozen=True, eq=False)
class RearrangedProfile:
    """
    Rearranged profile as a function of the measure radius ``s``.

    Attributes
    ----------
    s : numpy.ndarray
        Increasing measure radii.
    v_star : numpy.ndarray
        Rearranged values, non-increasing in ``s``.
    F : numpy.ndarray
        ``int K e^u dmu`` over the superlevel set of measure ``pi s^2``.
    K_hat : numpy.ndarray
        ``F'(s) / (2 pi s e^(v*(s)))``; NaN where undefined.
    xi : numpy.ndarray
        ``pi s^2``.
    alpha : float
        Exponent of the weight.
    weight_prefactor : float
        Scale factor ``s^(2 alpha)`` of the weight.
    s0 : float or None
        First radius where ``F`` reaches ``4 pi`` (``4 pi (1 + alpha)`` once
        the superlevel sets contain the cone point).
    s1 : float or None
        First radius whose superlevel set contains the cone point; ``None``
        if the cone point is outside the domain.
    """

    s: np.ndarray
    v_star: np.ndarray
    F: np.ndarray
    K_hat: np.ndarray
    xi: np.ndarray
    alpha: float = 0.0
    weight_prefactor: float = 1.0
    s0: Optional[float] = None
    s1: Optional[float] = None

    def __len__(self) -> int:
        return len(self.s)

    @cached_property
    def r_equiv(self) -> np.ndarray:
        """
        Radius of the disk centered at the cone point with the same weighted measure.
        """
        beta = 2.0 + 2.0 * self.alpha
        return (self.xi * (1.0 + self.alpha) / (math.pi * self.weight_prefactor)) ** (1.0 / beta)

    def v_star_at(self, s: np.ndarray) -> np.ndarray:
        """
        Linear interpolation of ``v*``; NaN outside the sampled radii.
        """
        return np.interp(s, self.s, self.v_star, left=np.nan, right=np.nan)

    def to_dataframe(self) -> pd.DataFrame:
        """
        Profile as a table with columns ``s, r_equiv, v_star, F, K_hat``.
        """
        return pd.DataFrame(
            {"s": self.s, "r_equiv": self.r_equiv, "v_star": self.v_star, "F": self.F, "K_hat": self.K_hat}
        )


def _first_threshold_crossing(s: np.ndarray, F: np.ndarray, alpha: float, s1: Optional[float]) -> Optional[float]:
    singular = np.zeros(s.shape, dtype=bool) if s1 is None else s >= s1
    thr = 4.0 * math.pi * np.where(singular, 1.0 + alpha, 1.0)
    above = np.nonzero(F >= thr)[0]
    if above.size == 0:
        return None
    k = int(above[0])
    if k == 0:
        return float(s[0])
    g0, g1 = F[k - 1] - thr[k - 1], F[k] - thr[k]
    return float(s[k - 1] + (s[k] - s[k - 1]) * (-g0) / (g1 - g0))


def rearrange(
    field: GridField,
    weight: ConicalWeight,
    levels: Optional[Sequence[float]] = None,
    clip_radius: Optional[float] = None,
    *,
    K: Optional[PotentialSpec] = None,
    n_levels: int = 512,
    clip_center: Point = (0.0, 0.0),
) -> RearrangedProfile:
    """
    Weighted symmetric decreasing rearrangement of a field.

    ``v*`` is the inverse of the sampled distribution function. ``F`` is
    obtained from the layer-cake identity
    ``int_{u > t} K e^u = e^t xi_K(t) + int_t^max e^tau xi_K(tau) dtau``, where
    ``xi_K(t) = int_{u > t} K dmu``; then ``K_hat = d xi_K / d xi``.

    Parameters
    ----------
    field : GridField
        Sampled field.
    weight : ConicalWeight
        Weight of the measure.
    levels : sequence of float, optional
        Level ladder; defaults to :func:`level_ladder` with ``n_levels`` levels.
    clip_radius : float, optional
        Superlevel sets are intersected with this disk.
    K : PotentialSpec, optional
        Potential; defaults to ``K = 1``.
    n_levels : int
        Size of the default ladder.
    clip_center : tuple[float, float]
        Center of the clipping disk.
    """
    K = ConstantPotential(1.0) if K is None else K
    if levels is None:
        levels = level_ladder(field, n_levels, weight=weight, clip_radius=clip_radius, clip_center=clip_center)
    data = distribution_function(field, weight, levels, clip_radius, clip_center=clip_center, K=K)
    lo, hi = _value_range(field, clip_radius, clip_center)
    keep = (data.levels >= lo) & (data.levels < hi) & (data.xi > 0)
    t = data.levels[keep]
    xi = data.xi[keep]
    xi_K = data.xi_K[keep]  # type: ignore[index]
    if len(t) < 3:
        raise ValueError("At least three levels inside the field range are needed")
    F_t = _layer_cake(t, xi_K, data.max_level)
    K_hat_t = _centered_ratio(xi_K, xi)

    # increasing s is decreasing t
    order = np.arange(len(t))[::-1]
    s = np.sqrt(xi[order] / math.pi)
    uniq = np.concatenate([[True], np.diff(s) > 0])
    order = order[uniq]
    s = s[uniq]

    s1: Optional[float] = None
    c = weight.center
    u_c = float(field.sample(c[0], c[1]))
    in_clip = clip_radius is None or math.hypot(c[0] - clip_center[0], c[1] - clip_center[1]) <= clip_radius
    if np.isfinite(u_c) and in_clip:
        if u_c >= hi:
            s1 = 0.0
        elif u_c < lo:
            s1 = math.sqrt(data.total_measure / math.pi)
        else:
            at_c = distribution_function(field, weight, [u_c], clip_radius, clip_center=clip_center)
            s1 = float(at_c.s[0])

    F = F_t[order]
    profile = RearrangedProfile(
        s=s,
        v_star=t[order],
        F=F,
        K_hat=K_hat_t[order],
        xi=xi[order],
        alpha=weight.alpha,
        weight_prefactor=weight.prefactor,
        s0=_first_threshold_crossing(s, F, weight.alpha, s1),
        s1=s1,
    )
    logger.info("rearranged field over %d levels (s in [%.4g, %.4g])", len(s), s[0], s[-1])
    return profile


def rearrange_radial(
    profile: RadialProfile,
    K: PotentialSpec,
    weight: Optional[ConicalWeight] = None,
) -> RearrangedProfile:
    """
    Rearrangement of a centered, radially non-increasing profile.

    Superlevel sets are the centered disks, so ``s`` follows from the disk
    measure and ``F`` from :func:`~liouvillelab.solvers.radial_mass`; ``K_hat``
    is still formed by centered differences of ``F``.
    """
    weight = ConicalWeight(profile.alpha) if weight is None else weight
    if weight.center != (0.0, 0.0) or weight.scale != 1.0 or weight.alpha != profile.alpha:
        raise ValueError("rearrange_radial needs the unscaled weight centered at the origin with the profile's alpha")
    vals = profile.values
    if np.any(np.diff(vals) > 1e-12 * max(1.0, float(np.max(np.abs(vals))))):
        raise ValueError("rearrange_radial needs a radially non-increasing profile")
    r = profile.nodes
    xi = np.array([weight.disk_measure(float(ri)) for ri in r])
    s = np.sqrt(xi / math.pi)
    F = np.asarray(radial_mass(profile, K, r))
    with np.errstate(over="ignore"):
        K_hat = _centered_ratio(F, xi) * np.exp(-vals)
    return RearrangedProfile(
        s=s,
        v_star=vals.copy(),
        F=F,
        K_hat=K_hat,
        xi=xi,
        alpha=profile.alpha,
        weight_prefactor=1.0,
        s0=_first_threshold_crossing(s, F, profile.alpha, 0.0),
        s1=0.0,
    )


def audit_khat_bounds(profile: RearrangedProfile, a: float, b: float, *, trim: float = defaults.khat_trim) -> float:
    """
    Worst violation of ``a <= K_hat <= b`` over the interior radii.

    A fraction ``trim`` of the defined values is dropped at each end.

    Returns
    -------
    float
        ``max(0, a - min K_hat, max K_hat - b)``.
    """
    vals = profile.K_hat[np.isfinite(profile.K_hat)]
    if vals.size == 0:
        raise ValueError("K_hat is undefined at every radius")
    cut = int(math.floor(trim * vals.size))
    if cut and vals.size > 2 * cut:
        vals = vals[cut:-cut]
    return float(max(0.0, a - np.min(vals), np.max(vals) - b))


@dataclass(frozen=True, eq=False)
class DifferentialInequalityReport:
    """
    Gaps ``F - c 2 pi s (-dv*/ds)`` at the interior radii.

    ``regular_gap`` uses ``c = 1`` and ``singular_gap`` uses ``c = 1 + alpha``;
    the applicable one is the singular gap where the superlevel set holds the
    cone point.
    """

    s: np.ndarray
    regular_gap: np.ndarray
    singular_gap: np.ndarray
    singular_branch: np.ndarray
    tol: float
    max_F: float

    @property
    def gap(self) -> np.ndarray:
        return np.where(self.singular_branch, self.singular_gap, self.regular_gap)

    @property
    def violations(self) -> np.ndarray:
        """
        Radii where the applicable gap is below ``-tol``.
        """
        return self.s[self.gap < -self.tol]

    @property
    def passed(self) -> bool:
        return self.violations.size == 0

    @property
    def max_relative_deficit(self) -> float:
        return float(max(0.0, -np.min(self.gap)) / self.max_F) if self.max_F > 0 else 0.0

    @property
    def max_relative_gap(self) -> float:
        """
        Largest ``|gap| / max F``; small values mean equality holds.
        """
        return float(np.max(np.abs(self.gap)) / self.max_F) if self.max_F > 0 else 0.0

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "s": self.s,
                "regular_gap": self.regular_gap,
                "singular_gap": self.singular_gap,
                "singular_branch": self.singular_branch,
            }
        )


def audit_differential_inequality(
    profile: RearrangedProfile, *, tol_fraction: float = defaults.diff_tol
) -> DifferentialInequalityReport:
    """
    Check ``F(s) >= c 2 pi s (-dv*/ds)`` with centered differences.

    Parameters
    ----------
    profile : RearrangedProfile
        Rearranged profile.
    tol_fraction : float
        Violations are gaps below ``-tol_fraction * max F``.
    """
    s, v, F = profile.s, profile.v_star, profile.F
    if len(s) < 3:
        raise ValueError("At least three radii are needed")
    slope = -(v[2:] - v[:-2]) / (s[2:] - s[:-2])
    si, Fi = s[1:-1], F[1:-1]
    flux = 2.0 * math.pi * si * slope
    singular = np.zeros(si.shape, dtype=bool) if profile.s1 is None else si >= profile.s1
    max_F = float(np.max(F))
    report = DifferentialInequalityReport(
        s=si,
        regular_gap=Fi - flux,
        singular_gap=Fi - (1.0 + profile.alpha) * flux,
        singular_branch=singular,
        tol=tol_fraction * max_F,
        max_F=max_F,
    )
    logger.info(
        "differential inequality: %d violations, max deficit %.3g of max F",
        report.violations.size,
        report.max_relative_deficit,
    )
    return report


@dataclass(frozen=True)
class TailFit:
    """
    Fit ``F(r) = limit - C r^(-exponent)`` on the tail of a profile.
    """

    limit: float
    C: float
    exponent: float
    r_min: float
    r_max: float
    n_points: int
    expected_exponent: Optional[float] = None


def integrated_bound_fit(
    profile: RearrangedProfile,
    a: Optional[float] = None,
    b: Optional[float] = None,
    s0: Optional[float] = None,
    *,
    gap_window: Tuple[float, float] = (1e-8, 1e-3),
    min_ratio: float = defaults.min_tail_ratio,
) -> TailFit:
    """
    Fit the approach of ``F`` to its limit against the equivalent radius.

    Points are used where ``F_last - F`` lies within ``gap_window`` (relative
    to ``F_last``) and beyond ``s0``. The model ``log(limit - F) =
    log C - exponent log r`` is fitted by nonlinear least squares with
    ``limit > max F``.

    Parameters
    ----------
    profile : RearrangedProfile
        Profile reaching far into its tail.
    a, b : float, optional
        Potential bounds; give the expected exponent ``2 (1 + alpha) sqrt(a/b)``.
    s0 : float, optional
        Lower bound on the fitted radii, in measure radius; defaults to
        ``profile.s0``.

    Raises
    ------
    InsufficientTailError
        If the fitted radii span less than ``min_ratio``.
    """
    s0 = profile.s0 if s0 is None else s0
    r = profile.r_equiv
    F = profile.F
    L0 = float(F[-1])
    gap0 = L0 - F
    sel = (gap0 >= gap_window[0] * L0) & (gap0 <= gap_window[1] * L0) & (r > 0)
    if s0 is not None:
        sel &= profile.s >= s0
    if np.count_nonzero(sel) < 4:
        raise InsufficientTailError("Fewer than four tail points in the fit window")
    rs, Fs = r[sel], F[sel]
    if rs.max() / rs.min() < min_ratio:
        raise InsufficientTailError(
            f"Tail spans r in [{rs.min():.4g}, {rs.max():.4g}], less than a factor {min_ratio}"
        )
    logr = np.log(rs)
    slope, intercept = np.polyfit(logr, np.log(gap0[sel]), 1)
    p0 = max(-slope, 1e-3)
    delta0 = math.exp(intercept) * float(r[-1]) ** (-p0)

    def residuals(theta: np.ndarray) -> np.ndarray:
        logC, p, log_delta = theta
        return np.log(L0 + np.exp(log_delta) - Fs) - (logC - p * logr)

    fit = least_squares(residuals, np.array([intercept, p0, math.log(max(delta0, 1e-300))]), method="trf")
    logC, p, log_delta = fit.x
    expected = None
    if a is not None and b is not None:
        expected = 2.0 * (1.0 + profile.alpha) * math.sqrt(a / b)
    result = TailFit(
        limit=L0 + math.exp(log_delta),
        C=math.exp(logC),
        exponent=float(p),
        r_min=float(rs.min()),
        r_max=float(rs.max()),
        n_points=int(rs.size),
        expected_exponent=expected,
    )
    logger.debug("tail fit %s (cost %.3g)", result, fit.cost)
    return result


def audit_huber_levels(
    field: GridField,
    weight: ConicalWeight,
    levels: Sequence[float],
    *,
    clip_radius: Optional[float] = None,
    clip_center: Point = (0.0, 0.0),
    tol: float = defaults.huber_tol,
) -> List[HuberAudit]:
    """
    Weighted isoperimetric ratio of every superlevel set.

    For each level the boundary length ``int (w)^(1/2) dl`` is compared with
    the measure ``xi(t)``; the constant is ``4 pi (1 + alpha)`` when the
    boundary winds around the cone point and ``4 pi`` otherwise. Levels
    outside the field range are skipped.

    Raises
    ------
    SingularBoundaryError
        If a level set passes through the cone point.
    """
    lo, hi = _value_range(field, clip_radius, clip_center)
    audits = []
    for t in np.sort(np.asarray(levels, dtype=float)):
        if not (lo < t < hi):
            continue
        contours = LevelContours(float(t), _contours(field, t, clip_radius, clip_center))
        if not contours.polylines:
            continue
        mass = sum(polygon_weighted_area(p, weight) for p in contours.polylines)
        near = contours.distance(weight.center) < field.spacing
        audits.append(
            huber_audit_from_parts(
                contours.polylines,
                weight,
                mass,
                encloses=contours.encloses(weight.center),
                inside=None if near else contours.winding(weight.center) > 0,
                tol=tol,
                level=float(t),
            )
        )
    failed = sum(not a.passed for a in audits)
    logger.info("Huber audit over %d levels: %d below 1 - %g", len(audits), failed, tol)
    return audits

