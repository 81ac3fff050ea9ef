"""
Standalone inequality checkers for solutions and sub-solutions.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from skimage import measure

from liouvillelab import defaults
from liouvillelab.core import (
    ConicalWeight,
    Disk,
    GridField,
    as_polylines,
    circle_samples,
    disk_weighted_integral,
    distance_to_polyline,
    interpolate,
    polygon_weighted_area,
    polygon_weighted_integral,
    signed_area,
    weighted_length,
    winding_number,
)
from liouvillelab.exceptions import (
    InvalidDomainError,
    OutOfDomainError,
    SubharmonicityWarning,
    SubsolutionWarning,
)
from liouvillelab.potential import ConstantPotential
from liouvillelab.solvers import residual

__all__ = [
    "SuzukiAudit",
    "HuberAudit",
    "SupInfReport",
    "suzuki_check",
    "huber_check",
    "supinf_eval",
    "supxinf_eval",
    "level_measure_decay",
]

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
HField = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray], GridField]


def _beta(alpha: float, singular: bool) -> float:
    return 4.0 * math.pi * (1.0 + alpha) if singular else 4.0 * math.pi


def _check_disk_in_domain(field: GridField, disk: Disk) -> None:
    cx, cy = disk.center
    if field.domain == "disk":
        reach = math.hypot(cx, cy) + disk.radius
    else:
        reach = max(abs(cx), abs(cy)) + disk.radius
    if reach > field.extent * (1.0 + 1e-12):
        raise OutOfDomainError(f"Disk of radius {disk.radius} at {disk.center} leaves the domain of {field!r}")


# ---------------------------------------------------------------------------
# Mean-value bound


@dataclass(frozen=True)
class SuzukiAudit:
    """
    Mean-value bound ``w(c) <= mean_{dB} w - 2 log{1 - lam/(2 beta) int_B |x|^(2 alpha) e^w}_+``.

    ``margin = rhs - lhs`` is non-negative for admissible sub-solutions. When
    the cone point lies within one grid cell of the circle both constants are
    tried, ``beta_interval`` holds them, and the smaller margin is reported.
    """

    center: Point
    radius: float
    lhs: float
    rhs: float
    beta: float
    mass: float
    margin: float
    lam: float
    boundary_mean: float
    beta_interval: Optional[Tuple[float, float]] = None


def _suzuki_rhs(boundary_mean: float, lam: float, beta: float, mass: float) -> float:
    bracket = 1.0 - lam * mass / (2.0 * beta)
    if bracket <= 0:
        return math.inf
    return boundary_mean - 2.0 * math.log(bracket)


def _warn_if_not_subsolution(w: GridField, weight: ConicalWeight, lam: float, disk: Disk) -> None:
    res = residual(w, weight.alpha, ConstantPotential(lam * weight.prefactor), center=weight.center)
    X, Y = w.coordinates
    h = w.spacing
    near_ball = np.hypot(X - disk.center[0], Y - disk.center[1]) <= disk.radius
    away = np.hypot(X - weight.center[0], Y - weight.center[1]) > 2.0 * h
    sel = res.mask & near_ball & away
    if not np.any(sel):
        return
    vals = w.values
    with np.errstate(over="ignore", invalid="ignore"):
        source = lam * weight(X, Y) * np.exp(vals)
        lap = res.values + source
    bad = sel & (res.values > 0.1 * (np.abs(lap) + np.abs(source)) + 1e-12)
    if np.any(bad):
        warnings.warn(
            f"-Laplace w <= lam |x|^(2 alpha) e^w fails at {int(np.count_nonzero(bad))} nodes in the ball",
            SubsolutionWarning,
            stacklevel=3,
        )


def suzuki_check(
    w: GridField,
    weight: ConicalWeight,
    lam: float,
    center: Point,
    radius: float,
    *,
    n_angles: int = defaults.n_angles,
    check_residual: bool = True,
) -> SuzukiAudit:
    """
    Evaluate the mean-value bound for a sub-solution on one ball.

    Parameters
    ----------
    w : GridField
        Field assumed to satisfy ``-Laplace w <= lam |x|^(2 alpha) e^w``.
    weight : ConicalWeight
        The weight ``|x - c|^(2 alpha)``.
    lam : float
        Positive constant.
    center, radius :
        The ball.
    n_angles : int
        Samples on the circle for the boundary mean.
    check_residual : bool
        Warn with `SubsolutionWarning` if the discrete residual shows the
        field is not a sub-solution on the ball.

    Raises
    ------
    OutOfDomainError
        If the ball leaves the domain.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    disk = Disk((float(center[0]), float(center[1])), float(radius))
    _check_disk_in_domain(w, disk)
    ux, uy = circle_samples(n_angles)
    boundary = w.sample(disk.center[0] + radius * ux, disk.center[1] + radius * uy)
    if not np.all(np.isfinite(boundary)):
        raise OutOfDomainError(f"Circle of radius {radius} at {disk.center} crosses undefined nodes")
    boundary_mean = float(np.mean(boundary))
    lhs = interpolate(w, disk.center)

    def exp_w(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(w.sample(x, y))

    mass = disk_weighted_integral(disk, weight, exp_w)
    if check_residual:
        _warn_if_not_subsolution(w, weight, lam, disk)

    dist = math.hypot(weight.center[0] - disk.center[0], weight.center[1] - disk.center[1])
    interval = None
    if weight.alpha != 0 and abs(dist - radius) < w.spacing:
        interval = (_beta(weight.alpha, True), _beta(weight.alpha, False))
        candidates = [(_suzuki_rhs(boundary_mean, lam, b, mass), b) for b in interval]
        rhs, beta = min(candidates)
    else:
        beta = _beta(weight.alpha, dist < radius)
        rhs = _suzuki_rhs(boundary_mean, lam, beta, mass)
    audit = SuzukiAudit(
        center=disk.center,
        radius=disk.radius,
        lhs=lhs,
        rhs=rhs,
        beta=beta,
        mass=mass,
        margin=rhs - lhs,
        lam=lam,
        boundary_mean=boundary_mean,
        beta_interval=interval,
    )
    logger.debug("Suzuki audit %s", audit)
    return audit


# ---------------------------------------------------------------------------
# Weighted isoperimetric inequality


@dataclass(frozen=True)
class HuberAudit:
    """
    Weighted isoperimetric ratio ``length^2 / (beta * mass)``.

    Attributes
    ----------
    boundary_weighted_length : float
        ``int_{dOmega} (e^h V0)^(1/2) dl``.
    interior_weighted_mass : float
        ``int_Omega e^h V0 dx``.
    beta : float
        ``4 pi (1 + alpha)`` if the boundary winds around the cone point,
        ``4 pi`` otherwise.
    ratio : float
    singular_inside : bool or None
        Whether the cone point lies in the region; ``None`` when it is too
        close to the boundary to tell.
    tol : float
        Allowed shortfall of the ratio below 1.
    level : float, optional
        Level of the superlevel set audited, if any.
    """

    boundary_weighted_length: float
    interior_weighted_mass: float
    beta: float
    ratio: float
    singular_inside: Optional[bool]
    tol: float = defaults.huber_tol
    level: Optional[float] = None

    @property
    def indeterminate(self) -> bool:
        return self.singular_inside is None

    @property
    def passed(self) -> bool:
        """
        ``ratio >= 1 - tol``; indeterminate audits are not failed.
        """
        return self.indeterminate or self.ratio >= 1.0 - self.tol


def huber_audit_from_parts(
    polylines: Sequence[np.ndarray],
    weight: ConicalWeight,
    mass: float,
    *,
    encloses: bool,
    inside: Optional[bool],
    tol: float = defaults.huber_tol,
    level: Optional[float] = None,
    density: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> HuberAudit:
    """
    Assemble a `HuberAudit` from oriented boundary polylines and a known mass.
    """
    length = sum(weighted_length(p, weight, density=density) for p in polylines)
    beta = _beta(weight.alpha, encloses)
    ratio = length**2 / (beta * mass) if mass > 0 else math.inf
    return HuberAudit(length, mass, beta, ratio, inside, tol, level)


def _segments(rings: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    segs, ring_id, local = [], [], []
    for k, ring in enumerate(rings):
        segs.append(np.stack([ring[:-1], ring[1:]], axis=1))
        ring_id.append(np.full(len(ring) - 1, k))
        local.append(np.arange(len(ring) - 1))
    return np.concatenate(segs), np.concatenate(ring_id), np.concatenate(local)


def _self_intersecting(rings: Sequence[np.ndarray], chunk: int = 256) -> bool:
    """
    Whether any two non-adjacent boundary segments cross.
    """
    segs, ring_id, local = _segments(rings)
    sizes = np.array([len(r) - 1 for r in rings])
    a, b = segs[:, 0], segs[:, 1]
    d = b - a
    n = len(segs)

    def cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    for start in range(0, n, chunk):
        i = np.arange(start, min(start + chunk, n))
        ai, di = a[i, None, :], d[i, None, :]
        o1 = cross(di, a[None, :, :] - ai)
        o2 = cross(di, b[None, :, :] - ai)
        o3 = cross(d[None, :, :], ai - a[None, :, :])
        o4 = cross(d[None, :, :], ai + di - a[None, :, :])
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        same = ring_id[i, None] == ring_id[None, :]
        gap = np.abs(local[i, None] - local[None, :])
        adjacent = same & ((gap <= 1) | (gap == sizes[ring_id[i]][:, None] - 1))
        if np.any(hit & ~adjacent):
            return True
    return False


def _oriented_rings(boundary: Union[np.ndarray, Sequence[np.ndarray]]) -> List[np.ndarray]:
    """
    Closed rings oriented with the region on their left.

    Rings nested an even number of times are outer boundaries, the others holes.
    """
    rings = as_polylines(boundary)
    for ring in rings:
        if len(ring) < 4 or not np.allclose(ring[0], ring[-1], rtol=0.0, atol=1e-12):
            raise InvalidDomainError("Boundary rings must be closed polylines (first vertex = last vertex)")
    if _self_intersecting(rings):
        raise InvalidDomainError("Boundary is self-intersecting")
    out = []
    for k, ring in enumerate(rings):
        depth = sum(winding_number(other, tuple(ring[0])) != 0 for j, other in enumerate(rings) if j != k)
        ccw = signed_area(ring) > 0
        want_ccw = depth % 2 == 0
        out.append(ring if ccw == want_ccw else ring[::-1].copy())
    return out


def region_mask(X: np.ndarray, Y: np.ndarray, rings: Sequence[np.ndarray]) -> np.ndarray:
    """
    Points inside the region bounded by the rings (even-odd rule).
    """
    points = np.column_stack([X.ravel(), Y.ravel()])
    inside = np.zeros(len(points), dtype=bool)
    for ring in rings:
        inside ^= measure.points_in_poly(points, ring)
    return inside.reshape(np.shape(X))


def _subharmonicity_violated(h: HField, rings: Sequence[np.ndarray]) -> bool:
    if isinstance(h, GridField):
        vals = h.values
        X, Y = h.coordinates
        step = h.spacing
    else:
        pts = np.concatenate(rings)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        step = float(max(hi - lo)) / 63.0
        x = np.linspace(lo[0], lo[0] + 63 * step, 64)
        y = np.linspace(lo[1], lo[1] + 63 * step, 64)
        X, Y = np.meshgrid(x, y)
        vals = np.asarray(h(X, Y), dtype=float)  # type: ignore[operator]
    lap = np.full(vals.shape, np.nan)
    lap[1:-1, 1:-1] = (
        vals[:-2, 1:-1] + vals[2:, 1:-1] + vals[1:-1, :-2] + vals[1:-1, 2:] - 4.0 * vals[1:-1, 1:-1]
    ) / step**2
    inside = region_mask(X, Y, rings) & np.isfinite(lap)
    if not np.any(inside):
        return False
    scale = 1.0 + float(np.nanmax(np.abs(vals[inside])))
    return bool(np.any(lap[inside] < -1e-8 * scale / step**2))


def huber_check(
    boundary: Union[np.ndarray, Sequence[np.ndarray]],
    h_field: HField,
    alpha: float,
    *,
    center: Point = (0.0, 0.0),
    tol: float = defaults.huber_tol,
    check_subharmonic: bool = True,
) -> HuberAudit:
    """
    Weighted isoperimetric inequality for an explicit region.

    ``(int_{dOmega} (e^h V0)^(1/2) dl)^2 >= beta int_Omega e^h V0 dx`` with
    ``V0 = |x - center|^(2 alpha)``.

    Parameters
    ----------
    boundary : array_like or sequence of array_like
        One or more closed rings; rings nested inside others bound holes.
    h_field : float, callable or GridField
        Subharmonic function ``h``; a float is a constant.
    alpha : float
        Exponent of ``V0``.
    center : tuple[float, float]
        Cone point of ``V0``.
    tol : float
        Allowed shortfall of the ratio below 1.
    check_subharmonic : bool
        Warn with `SubharmonicityWarning` if the discrete Laplacian of ``h``
        is negative inside the region.

    Raises
    ------
    InvalidDomainError
        If a ring is open or the boundary self-intersects.
    """
    rings = _oriented_rings(boundary)
    weight = ConicalWeight(alpha, center)
    if isinstance(h_field, (int, float)):
        k = float(h_field)
        mass = math.exp(k) * sum(polygon_weighted_area(r, weight) for r in rings)
        half = math.exp(0.5 * k)

        def density(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return np.full(np.shape(x), half)

    else:
        if isinstance(h_field, GridField):
            field = h_field

            def h(x: np.ndarray, y: np.ndarray) -> np.ndarray:
                return np.nan_to_num(field.sample(x, y), nan=0.0)

        else:
            h = h_field

        def exp_h(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return np.exp(h(x, y))

        def half_exp_h(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return np.exp(0.5 * h(x, y))

        mass = sum(polygon_weighted_integral(r, weight, exp_h) for r in rings)
        density = half_exp_h
        if check_subharmonic and _subharmonicity_violated(h_field, rings):
            warnings.warn("h is not subharmonic inside the region", SubharmonicityWarning, stacklevel=2)

    encloses = any(winding_number(r, center) != 0 for r in rings)
    scale = max(float(np.max(np.abs(r - np.asarray(center)))) for r in rings)
    if min(distance_to_polyline(r, center) for r in rings) <= 1e-9 * scale:
        inside: Optional[bool] = None
    else:
        inside = sum(winding_number(r, center) for r in rings) > 0
    audit = huber_audit_from_parts(rings, weight, mass, encloses=encloses, inside=inside, tol=tol, density=density)
    logger.info("Huber ratio %.6g (beta = %.6g)", audit.ratio, audit.beta)
    return audit


# ---------------------------------------------------------------------------
# sup + inf


@dataclass(frozen=True)
class SupInfReport:
    """
    ``sup_A u`` and ``inf_Omega u`` with the combinations built from them.

    Attributes
    ----------
    sup_A, inf_Omega : float
    sigma : float
        Exponent parameter, at least 1.
    combination : float
        ``sup_A + sqrt(sigma) inf_Omega``.
    normalized : float
        ``sup_A / sqrt(sigma) + inf_Omega``.
    product_form : float
        ``exp(sup_A) exp(inf_Omega)^sqrt(sigma)``.
    """

    sup_A: float
    inf_Omega: float
    sigma: float
    combination: float
    normalized: float
    product_form: float
    argmax: Point = (math.nan, math.nan)

    def to_series(self) -> pd.Series:
        return pd.Series(
            {
                "sup_A": self.sup_A,
                "inf_Omega": self.inf_Omega,
                "sigma": self.sigma,
                "combination": self.combination,
                "normalized": self.normalized,
                "product_form": self.product_form,
            }
        )


def parabolic_refine(field: GridField, i: int, j: int, *, maximum: bool = True) -> Tuple[float, Point]:
    """
    Separable parabolic refinement of a grid extremum at node ``(i, j)``.

    Falls back to the node value when a neighbour is undefined or the
    stencil is not curved the right way.
    """
    v = field.values
    n = field.n
    h = field.spacing
    x0, y0 = float(field.x[j]), float(field.x[i])
    f0 = float(v[i, j])
    if not (0 < i < n - 1 and 0 < j < n - 1):
        return f0, (x0, y0)
    value, point = f0, [x0, y0]
    for axis, (fm, fp) in enumerate(((v[i, j - 1], v[i, j + 1]), (v[i - 1, j], v[i + 1, j]))):
        if not (np.isfinite(fm) and np.isfinite(fp)):
            continue
        curv = fm - 2.0 * f0 + fp
        if (maximum and curv >= 0) or (not maximum and curv <= 0):
            continue
        offset = float(np.clip(0.5 * (fm - fp) / curv, -0.5, 0.5))
        value -= 0.125 * (fp - fm) ** 2 / curv if abs(offset) < 0.5 else 0.0
        point[axis] += offset * h
    return value, (point[0], point[1])


def _nodes_in(field: GridField, disk: Disk) -> np.ndarray:
    X, Y = field.coordinates
    return field.mask & (np.hypot(X - disk.center[0], Y - disk.center[1]) <= disk.radius)


def _boundary_samples(field: GridField, n_angles: int) -> np.ndarray:
    if field.domain != "disk":
        return np.empty(0)
    ux, uy = circle_samples(n_angles)
    r = field.extent * (1.0 - 1e-12)
    vals = field.sample(r * ux, r * uy)
    return vals[np.isfinite(vals)]


def _sup_inf(field: GridField, A: Disk, n_angles: int) -> Tuple[float, float, Point]:
    _check_disk_in_domain(field, A)
    in_A = _nodes_in(field, A)
    if not np.any(in_A):
        raise OutOfDomainError(f"No grid nodes inside {A}")
    vals = field.values
    i, j = np.unravel_index(np.argmax(np.where(in_A, vals, -np.inf)), vals.shape)
    sup, argmax = parabolic_refine(field, int(i), int(j), maximum=True)
    interior = field.interior
    k, m = np.unravel_index(np.argmin(np.where(interior, vals, np.inf)), vals.shape)
    inf, _ = parabolic_refine(field, int(k), int(m), maximum=False)
    boundary = _boundary_samples(field, n_angles)
    if boundary.size:
        inf = min(inf, float(np.min(boundary)))
    return sup, inf, argmax


def supinf_eval(field: GridField, A: Disk, sigma: float, *, n_angles: int = defaults.n_angles) -> SupInfReport:
    """
    Evaluate ``sup_A u + sqrt(sigma) inf_Omega u`` for a sampled field.

    The supremum is over nodes in ``A``; the infimum over the interior nodes
    (one-cell boundary layer excluded) together with samples on the domain
    circle. Both extrema are refined by a separable parabola on the 3x3
    stencil.
    """
    if not sigma >= 1:
        raise ValueError(f"sigma must be at least 1, got {sigma}")
    sup, inf, argmax = _sup_inf(field, A, n_angles)
    root = math.sqrt(sigma)
    combination = sup + root * inf
    with np.errstate(over="ignore"):
        product = float(np.exp(sup) * np.exp(root * inf))
    return SupInfReport(
        sup_A=sup,
        inf_Omega=inf,
        sigma=float(sigma),
        combination=combination,
        normalized=sup / root + inf,
        product_form=product,
        argmax=argmax,
    )


def supxinf_eval(
    field: GridField,
    A: Disk,
    sigma: float,
    *,
    singular: bool = False,
    weight: Optional[ConicalWeight] = None,
    n_angles: int = defaults.n_angles,
) -> float:
    """
    ``(sup_A rho) (inf_Omega rho)^sqrt(sigma)`` for the conformal factor ``rho``.

    ``rho = e^u`` by default; with ``singular=True`` it is ``w e^u`` for the
    conical weight ``w``, which makes the product infinite when the cone point
    lies in ``A`` and ``alpha < 0``. Evaluated in log space.
    """
    if not sigma >= 1:
        raise ValueError(f"sigma must be at least 1, got {sigma}")
    root = math.sqrt(sigma)
    if not singular:
        sup, inf, _ = _sup_inf(field, A, n_angles)
        log_value = sup + root * inf
    else:
        weight = ConicalWeight(field.alpha) if weight is None else weight
        c = weight.center
        if weight.alpha < 0 and math.hypot(c[0] - A.center[0], c[1] - A.center[1]) <= A.radius:
            return math.inf
        X, Y = field.coordinates
        with np.errstate(divide="ignore"):
            log_rho = field.values + np.log(weight(X, Y))
        _check_disk_in_domain(field, A)
        in_A = _nodes_in(field, A)
        sup = float(np.max(log_rho[in_A]))
        candidates = log_rho[field.interior & np.isfinite(log_rho)]
        inf = float(np.min(candidates))
        if field.domain == "disk":
            ux, uy = circle_samples(n_angles)
            r = field.extent * (1.0 - 1e-12)
            bx, by = r * ux, r * uy
            b = field.sample(bx, by) + np.log(weight(bx, by))
            b = b[np.isfinite(b)]
            if b.size:
                inf = min(inf, float(np.min(b)))
        log_value = sup + root * inf
    if log_value > defaults.log_max_float:
        return math.inf
    return math.exp(log_value)


# ---------------------------------------------------------------------------
# Level-set nullity


def level_measure_decay(field: GridField, t: float, eps_ladder: Sequence[float]) -> List[Tuple[float, float, float]]:
    """
    Unweighted area of ``{|u - t| < eps}`` for each ``eps``.

    Returns
    -------
    list of tuple
        ``(eps, measure, measure / eps)``, in the order of ``eps_ladder``.
        A bounded last column as ``eps`` shrinks indicates a null level set.
    """
    from liouvillelab.rearrangement import distribution_function

    eps = np.asarray(eps_ladder, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps values must be positive")
    weight = ConicalWeight()
    out = []
    for e in eps:
        data = distribution_function(field, weight, [t - e, t + e])
        below, above = data.xi[0], data.xi[1]
        measure = float(below - above)
        out.append((float(e), measure, measure / float(e)))
    logger.debug("level measure decay at t=%g: %s", t, out)
    return out
