"""
Domain geometry, conical weights and sampled fields.

Every integral of the weight ``(s |x - c|)^(2 alpha)`` is computed in polar
coordinates about ``c``: exactly in the radius, and either in closed form or by
adaptive quadrature in the angle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import xarray as xr
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.special import hyp2f1, roots_jacobi, roots_legendre

from liouvillelab import defaults
from liouvillelab.exceptions import (
    InvalidWeightError,
    OutOfDomainError,
    SingularBoundaryError,
)

__all__ = [
    "ConicalWeight",
    "Disk",
    "Cell",
    "GridField",
    "RadialProfile",
    "weighted_area",
    "weighted_length",
    "interpolate",
    "polygon_weighted_area",
    "polygon_weighted_integral",
    "disk_weighted_integral",
    "cell_measures",
    "dual_cell_weights",
]

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
FieldFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]

# Relative size below which a fan triangle is treated as degenerate.
_DEGENERATE = 1e-14


@dataclass(frozen=True)
class ConicalWeight:
    """
    The conical weight ``(scale * |x - center|)^(2 alpha)``.

    Parameters
    ----------
    alpha : float
        Exponent, in (-1, 0].
    center : tuple[float, float]
        Location of the cone point.
    scale : float
        Positive dilation factor of the distance. The rescaled weight
        ``|tau/|x*| y + x*/|x*||^(2 alpha)`` is ``center=-x*/tau`` and
        ``scale=tau/|x*|``.
    """

    alpha: float = 0.0
    center: Point = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        if not (-1.0 < alpha <= 0.0):
            raise InvalidWeightError(f"alpha must lie in (-1, 0], got {self.alpha}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise InvalidWeightError(f"scale must be positive, got {self.scale}")
        cx, cy = self.center
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "center", (float(cx), float(cy)))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def beta(self) -> float:
        """
        Radial exponent ``2 + 2 alpha`` of the measure of centered disks.
        """
        return 2.0 + 2.0 * self.alpha

    @property
    def prefactor(self) -> float:
        """
        ``scale^(2 alpha)``.
        """
        return float(self.scale ** (2.0 * self.alpha))

    @property
    def is_singular(self) -> bool:
        return self.alpha < 0

    def __call__(self, x: Any, y: Any) -> np.ndarray:
        """
        Evaluate the weight; ``+inf`` at the center when ``alpha < 0``.
        """
        r = np.hypot(np.asarray(x, dtype=float) - self.center[0], np.asarray(y, dtype=float) - self.center[1])
        if self.alpha == 0:
            return np.ones_like(r)
        with np.errstate(divide="ignore"):
            return (self.scale * r) ** (2.0 * self.alpha)

    def disk_measure(self, radius: float) -> float:
        """
        Weighted area of the disk of given radius centered at the cone point.
        """
        return self.prefactor * math.pi * radius**self.beta / (1.0 + self.alpha)

    def shifted(self, center: Point) -> ConicalWeight:
        return ConicalWeight(self.alpha, center, self.scale)


@dataclass(frozen=True)
class Disk:
    """
    A closed disk.
    """

    center: Point
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"Disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def contains(self, x: Any, y: Any) -> np.ndarray:
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) <= self.radius

    def polyline(self, n_segments: int = 1024) -> np.ndarray:
        """
        Closed counter-clockwise polyline with vertices on the circle.
        """
        theta = np.linspace(0.0, 2 * np.pi, n_segments + 1)
        pts = np.column_stack(
            [self.center[0] + self.radius * np.cos(theta), self.center[1] + self.radius * np.sin(theta)]
        )
        pts[-1] = pts[0]
        return pts


@dataclass(frozen=True)
class Cell:
    """
    An axis-aligned rectangle ``[x0, x1] x [y0, y1]``.
    """

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("Cell corners must satisfy x1 > x0 and y1 > y0")

    @property
    def vertices(self) -> np.ndarray:
        """
        Closed counter-clockwise vertex list.
        """
        return np.array(
            [[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1], [self.x0, self.y0]]
        )

    def contains_point(self, point: Point) -> bool:
        return bool(self.x0 <= point[0] <= self.x1 and self.y0 <= point[1] <= self.y1)


# ---------------------------------------------------------------------------
# Fan integrals


def _sec_power_antiderivative(s: np.ndarray, beta: float) -> np.ndarray:
    """
    ``int_0^psi sec(t)^beta dt`` as a function of ``s = sin(psi)``.
    """
    if beta == 2.0:
        return s / np.sqrt(1.0 - s * s)
    return s * hyp2f1(0.5, 0.5 * (beta + 1.0), 1.5, s * s)


def _fan_geometry(p: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, ...]:
    """
    Foot distance and sines of the foot angles of the edges ``p -> q``.

    Points are relative to the fan apex. Returns ``(ok, cross, dist, sp, sq)``
    where ``ok`` masks non-degenerate edges.
    """
    cross = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
    edge = q - p
    length = np.hypot(edge[:, 0], edge[:, 1])
    rp = np.hypot(p[:, 0], p[:, 1])
    rq = np.hypot(q[:, 0], q[:, 1])
    scale = np.maximum(np.maximum(rp, rq), 1e-300)
    ok = (length > _DEGENERATE * scale) & (np.abs(cross) > _DEGENERATE * length * scale)
    dist = np.zeros_like(cross)
    sp = np.zeros_like(cross)
    sq = np.zeros_like(cross)
    dist[ok] = np.abs(cross[ok]) / length[ok]
    sp[ok] = np.clip(np.sum(p[ok] * edge[ok], axis=1) / (length[ok] * rp[ok]), -1.0, 1.0)
    sq[ok] = np.clip(np.sum(q[ok] * edge[ok], axis=1) / (length[ok] * rq[ok]), -1.0, 1.0)
    return ok, cross, dist, sp, sq


def _fan_measure(p: np.ndarray, q: np.ndarray, beta: float, radius: Optional[float] = None) -> np.ndarray:
    """
    Signed integral of ``|x|^(beta - 2)`` over the triangles ``(0, p, q)``.

    With ``radius`` the triangles are first intersected with the centered
    disk of that radius. Positive for counter-clockwise ``p -> q``.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    ok, cross, dist, sp, sq = _fan_geometry(p, q)
    out = np.zeros(len(p))
    if not np.any(ok):
        return out
    d = dist[ok]
    s_lo, s_hi = sp[ok], sq[ok]
    sign = np.sign(cross[ok])
    if radius is None:
        G = _sec_power_antiderivative
        out[ok] = sign * d**beta / beta * (G(s_hi, beta) - G(s_lo, beta))
        return out

    psi_lo, psi_hi = np.arcsin(s_lo), np.arcsin(s_hi)
    with np.errstate(invalid="ignore"):
        psi_c = np.where(d < radius, np.arccos(np.minimum(d / radius, 1.0)), 0.0)
    in_lo = np.maximum(psi_lo, -psi_c)
    in_hi = np.minimum(psi_hi, psi_c)
    has_inside = in_hi > in_lo
    inside = np.zeros_like(d)
    if np.any(has_inside):
        G = _sec_power_antiderivative
        inside[has_inside] = (
            d[has_inside] ** beta
            / beta
            * (G(np.sin(in_hi[has_inside]), beta) - G(np.sin(in_lo[has_inside]), beta))
        )
    inside_angle = np.where(has_inside, in_hi - in_lo, 0.0)
    outside = radius**beta / beta * ((psi_hi - psi_lo) - inside_angle)
    out[ok] = sign * (inside + outside)
    return out


def _closed(vertices: Any) -> np.ndarray:
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("A polygon needs at least three (x, y) vertices")
    if not np.array_equal(pts[0], pts[-1]):
        pts = np.vstack([pts, pts[:1]])
    return pts


def polygon_weighted_area(vertices: Any, w: ConicalWeight, *, clip_radius: Optional[float] = None) -> float:
    """
    Signed weighted area of a polygon.

    Parameters
    ----------
    vertices : array_like
        ``(N, 2)`` vertices; the polygon is closed if needed.
    w : ConicalWeight
        Weight.
    clip_radius : float, optional
        If given, only the part of the polygon inside the disk of this radius
        centered at the cone point is measured.

    Returns
    -------
    float
        Positive for counter-clockwise polygons.
    """
    pts = _closed(vertices) - np.asarray(w.center)
    fan = _fan_measure(pts[:-1], pts[1:], w.beta, clip_radius)
    return w.prefactor * float(np.sum(fan))


def _angle_between(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    cross = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
    dot = np.sum(p * q, axis=1)
    return np.arctan2(cross, dot)


def polygon_weighted_integral(
    vertices: Any,
    w: ConicalWeight,
    func: FieldFunc,
    *,
    apex: Optional[Point] = None,
    n_angle: int = defaults.n_fan_angle,
    n_radius: int = defaults.n_fan_radius,
) -> float:
    """
    Signed integral of ``func * w`` over a polygon.

    The polygon is decomposed into signed triangles from ``apex``. When the
    apex is the cone point (the default) the radial rule is Gauss-Jacobi with
    the weight's power law built in; otherwise Gauss-Legendre is used and the
    weight is evaluated pointwise, so the apex should then be away from the
    cone point. ``func`` must be defined on every fan triangle.
    """
    pts = _closed(vertices)
    apex_pt = np.asarray(w.center if apex is None else apex, dtype=float)
    rel = pts - apex_pt
    p, q = rel[:-1], rel[1:]
    dtheta = _angle_between(p, q)
    keep = np.abs(dtheta) > 0
    if not np.any(keep):
        return 0.0
    p, q, dtheta = p[keep], q[keep], dtheta[keep]
    theta0 = np.arctan2(p[:, 1], p[:, 0])

    xa, wa = roots_legendre(n_angle)
    theta = theta0[:, None] + 0.5 * dtheta[:, None] * (1.0 + xa[None, :])
    ex, ey = np.cos(theta), np.sin(theta)
    d = q - p
    denom = ex * d[:, 1, None] - ey * d[:, 0, None]
    num = (p[:, 0] * d[:, 1] - p[:, 1] * d[:, 0])[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(np.abs(denom) > 0, num / denom, 0.0)
    rho = np.maximum(rho, 0.0)

    if apex is None:
        beta = w.beta
        xr_, wr = roots_jacobi(n_radius, 0.0, beta - 1.0)
        r = 0.5 * rho[:, :, None] * (1.0 + xr_[None, None, :])
        vals = func(apex_pt[0] + r * ex[:, :, None], apex_pt[1] + r * ey[:, :, None])
        radial = np.sum(vals * wr, axis=2) * (0.5 * rho) ** beta * w.prefactor
    else:
        xr_, wr = roots_legendre(n_radius)
        r = 0.5 * rho[:, :, None] * (1.0 + xr_[None, None, :])
        x = apex_pt[0] + r * ex[:, :, None]
        y = apex_pt[1] + r * ey[:, :, None]
        vals = func(x, y) * w(x, y) * r
        radial = np.sum(vals * wr, axis=2) * 0.5 * rho
    return float(np.sum(0.5 * dtheta * np.sum(radial * wa, axis=1)))


def disk_weighted_integral(
    disk: Disk,
    w: ConicalWeight,
    func: Optional[FieldFunc] = None,
    *,
    n_theta: int = 256,
    panel_width: Optional[float] = None,
    n_gauss: int = 4,
) -> float:
    """
    Integral of ``func * w`` over a disk.

    When the cone point lies inside the disk the integral is taken in polar
    coordinates about it, with the exact ray/circle exit distance and a
    Gauss-Jacobi first panel; otherwise polar coordinates about the disk
    center are used. ``func=None`` integrates the weight alone.
    """
    if func is None:
        return weighted_area(disk, w)
    if panel_width is None:
        panel_width = disk.radius / 64.0
    wc = np.asarray(w.center)
    dc = np.asarray(disk.center)
    dvec = wc - dc
    D = float(np.hypot(*dvec))
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    ex, ey = np.cos(theta), np.sin(theta)
    dtheta = 2 * np.pi / n_theta
    xg, wg = roots_legendre(n_gauss)

    if D < disk.radius:
        ed = ex * dvec[0] + ey * dvec[1]
        r_exit = -ed + np.sqrt(ed * ed + disk.radius**2 - D * D)
        beta = w.beta
        n_panels = max(1, int(np.ceil(np.max(r_exit) / panel_width)))
        # first panel carries the r^(beta - 1) singularity
        xj, wj = roots_jacobi(n_gauss, 0.0, beta - 1.0)
        edges = r_exit[:, None] * np.linspace(0.0, 1.0, n_panels + 1)[None, :]
        total = np.zeros(n_theta)
        r0 = edges[:, 1]
        r = 0.5 * r0[:, None] * (1.0 + xj[None, :])
        vals = func(wc[0] + r * ex[:, None], wc[1] + r * ey[:, None])
        total += np.sum(vals * wj, axis=1) * (0.5 * r0) ** beta
        if n_panels > 1:
            lo, hi = edges[:, 1:-1], edges[:, 2:]
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            r = mid[:, :, None] + half[:, :, None] * xg[None, None, :]
            vals = func(wc[0] + r * ex[:, None, None], wc[1] + r * ey[:, None, None]) * r ** (beta - 1.0)
            total += np.sum(np.sum(vals * wg, axis=2) * half, axis=1)
        return float(w.prefactor * dtheta * np.sum(total))

    n_panels = max(1, int(np.ceil(disk.radius / panel_width)))
    edges = np.linspace(0.0, disk.radius, n_panels + 1)
    mid, half = 0.5 * (edges[:-1] + edges[1:]), 0.5 * np.diff(edges)
    r = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    rw = (half[:, None] * wg[None, :]).ravel()
    x = dc[0] + r[None, :] * ex[:, None]
    y = dc[1] + r[None, :] * ey[:, None]
    vals = func(x, y) * w(x, y) * r[None, :]
    return float(dtheta * np.sum(vals * rw[None, :]))


# ---------------------------------------------------------------------------
# Areas and lengths


def _disk_area(disk: Disk, w: ConicalWeight) -> float:
    R = disk.radius
    dvec = np.asarray(w.center) - np.asarray(disk.center)
    D = float(np.hypot(*dvec))
    beta = w.beta
    if D <= _DEGENERATE * R:
        return w.disk_measure(R)

    if D <= R:

        def integrand(theta: float) -> float:
            ed = math.cos(theta) * dvec[0] + math.sin(theta) * dvec[1]
            r2 = -ed + math.sqrt(max(ed * ed + R * R - D * D, 0.0))
            return r2**beta / beta

        value, err = integrate.quad(integrand, 0.0, 2 * math.pi, epsabs=0.0, epsrel=1e-12, limit=400)
    else:
        ratio = R / D

        def integrand(phi: float) -> float:
            # sin(theta - theta0) = ratio * sin(phi) removes the tangent square roots
            c = math.sqrt(1.0 - (ratio * math.sin(phi)) ** 2)
            root = R * math.cos(phi)
            r1, r2 = D * c - root, D * c + root
            return (r2**beta - max(r1, 0.0) ** beta) / beta * root / (D * c)

        value, err = integrate.quad(integrand, -0.5 * math.pi, 0.5 * math.pi, epsabs=0.0, epsrel=1e-12, limit=400)
    logger.debug("off-center disk measure %.16g (quad error %.2e)", value, err)
    return w.prefactor * value


def _cell_area_quadrature(cell: Cell, w: ConicalWeight) -> float:
    value, err = integrate.dblquad(
        lambda y, x: float(w(x, y)),
        cell.x0,
        cell.x1,
        cell.y0,
        cell.y1,
        epsabs=0.0,
        epsrel=1e-10,
    )
    logger.debug("cell measure %.16g (dblquad error %.2e)", value, err)
    return float(value)


def weighted_area(region: Union[Disk, Cell, np.ndarray], w: ConicalWeight, *, method: str = "auto") -> float:
    """
    Weighted area ``int_region |x - c|^(2 alpha) dx``.

    Parameters
    ----------
    region : Disk, Cell or array_like
        A disk, an axis-aligned cell, or a polygon given by its vertices.
    w : ConicalWeight
        Weight.
    method : {"auto", "polar", "quadrature"}
        For cells: ``"polar"`` splits the cell into fan triangles about the
        cone point, integrated exactly; ``"quadrature"`` uses adaptive tensor
        quadrature (cells not containing the cone point only); ``"auto"``
        picks quadrature for regular cells and the polar split for the cell
        holding the cone point.

    Returns
    -------
    float
    """
    if isinstance(region, Disk):
        return _disk_area(region, w)
    if isinstance(region, Cell):
        singular = region.contains_point(w.center)
        if method == "quadrature" and singular and w.is_singular:
            raise ValueError("Adaptive quadrature cannot integrate a cell holding the cone point")
        if method == "quadrature" or (method == "auto" and not singular):
            return w.prefactor * _cell_area_quadrature(region, ConicalWeight(w.alpha, w.center))
        if method not in ("auto", "polar"):
            raise ValueError(f"Unknown method {method!r}")
        return abs(polygon_weighted_area(region.vertices, w))
    return abs(polygon_weighted_area(region, w))


def cell_measures(x_edges: np.ndarray, y_edges: np.ndarray, w: ConicalWeight) -> np.ndarray:
    """
    Weighted areas of all cells of a tensor grid.

    Returns an array of shape ``(len(y_edges) - 1, len(x_edges) - 1)``.
    """
    xe = np.asarray(x_edges, dtype=float) - w.center[0]
    ye = np.asarray(y_edges, dtype=float) - w.center[1]
    X, Y = np.meshgrid(xe, ye)
    # horizontal edges (i, j) -> (i, j + 1) and vertical edges (i, j) -> (i + 1, j)
    hp = np.column_stack([X[:, :-1].ravel(), Y[:, :-1].ravel()])
    hq = np.column_stack([X[:, 1:].ravel(), Y[:, 1:].ravel()])
    H = _fan_measure(hp, hq, w.beta).reshape(len(ye), len(xe) - 1)
    vp = np.column_stack([X[:-1, :].ravel(), Y[:-1, :].ravel()])
    vq = np.column_stack([X[1:, :].ravel(), Y[1:, :].ravel()])
    V = _fan_measure(vp, vq, w.beta).reshape(len(ye) - 1, len(xe))
    return w.prefactor * (H[:-1, :] + V[:, 1:] - H[1:, :] - V[:, :-1])


def weighted_length(
    path: Any,
    w: ConicalWeight,
    *,
    density: Optional[FieldFunc] = None,
    rtol: float = 1e-8,
    n_gauss: int = 8,
    max_depth: int = 40,
) -> float:
    """
    Weighted length ``int_path (s |x - c|)^alpha dl`` of a polyline.

    Each segment is integrated with Gauss-Legendre and bisected until the
    relative change is below ``rtol``.

    Parameters
    ----------
    path : array_like
        ``(N, 2)`` vertices, ``N >= 2``.
    w : ConicalWeight
        Weight; its square root is the line density.
    density : callable, optional
        Extra factor ``f(x, y)`` multiplying the line density.

    Raises
    ------
    SingularBoundaryError
        If a vertex coincides with the cone point of a singular weight.
    """
    pts = np.asarray(path, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("A path needs at least two (x, y) vertices")
    if w.is_singular:
        dist = np.hypot(pts[:, 0] - w.center[0], pts[:, 1] - w.center[1])
        if np.any(dist <= _DEGENERATE * max(1.0, float(np.max(dist)))):
            raise SingularBoundaryError(f"Path vertex coincides with the cone point {w.center}")

    xg, wg = roots_legendre(n_gauss)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg

    def line_density(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        val = np.sqrt(w(x, y))
        if density is not None:
            val = val * density(x, y)
        return val

    def rule(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = b - a
        length = np.hypot(d[:, 0], d[:, 1])
        x = a[:, 0, None] + d[:, 0, None] * xg[None, :]
        y = a[:, 1, None] + d[:, 1, None] * xg[None, :]
        return np.sum(line_density(x, y) * wg, axis=1) * length

    a, b = pts[:-1], pts[1:]
    coarse = rule(a, b)
    total = 0.0
    for depth in range(max_depth):
        m = 0.5 * (a + b)
        left, right = rule(a, m), rule(m, b)
        fine = left + right
        done = np.abs(fine - coarse) <= rtol * np.abs(fine)
        total += float(np.sum(fine[done]))
        if np.all(done):
            return total
        a, b, m = a[~done], b[~done], m[~done]
        a, b = np.vstack([a, m]), np.vstack([m, b])
        coarse = np.concatenate([left[~done], right[~done]])
    logger.warning("weighted_length: %d segments unconverged after %d bisections", len(a), max_depth)
    return total + float(np.sum(coarse))


# ---------------------------------------------------------------------------
# Fields


class GridField:
    """
    A field sampled on a uniform node-centered grid over ``[-extent, extent]^2``.

    ``values[i, j]`` is the sample at ``(x[j], y[i])``. Nodes outside the
    domain mask (the ghost ring) may hold finite values, used as Dirichlet data
    and for interpolation up to the domain boundary, or NaN.

    Parameters
    ----------
    values : array_like
        ``(n, n)`` samples, ``n >= 16``.
    extent : float
        Disk radius or square half-width.
    domain : {"disk", "square"}
        Shape of the domain.
    alpha : float
        Exponent of the equation the field belongs to.
    mask : array_like of bool, optional
        Domain mask; defaults to the nodes strictly inside the disk, or all
        nodes of a square.
    """

    def __init__(
        self,
        values: Any,
        extent: float,
        *,
        domain: str = "disk",
        alpha: float = 0.0,
        mask: Optional[Any] = None,
    ):
        vals = np.array(values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError("values must be a square 2D array")
        if vals.shape[0] < 16:
            raise ValueError(f"A grid needs at least 16 samples per axis, got {vals.shape[0]}")
        if not extent > 0:
            raise ValueError(f"extent must be positive, got {extent}")
        if domain not in ("disk", "square"):
            raise ValueError(f"domain must be 'disk' or 'square', got {domain!r}")
        self._extent = float(extent)
        self._domain = domain
        self._alpha = float(alpha)
        self._values = vals
        self._values.flags.writeable = False
        if mask is None:
            if domain == "disk":
                X, Y = self.coordinates
                mask = np.hypot(X, Y) < self._extent
            else:
                mask = np.ones(vals.shape, dtype=bool)
        self._mask = np.array(mask, dtype=bool)
        if self._mask.shape != vals.shape:
            raise ValueError("mask must have the same shape as values")
        self._mask.flags.writeable = False
        if not np.all(np.isfinite(vals[self._mask])):
            raise ValueError("Every node inside the domain must hold a finite value")
        self._hash = id(self)

    @classmethod
    def from_function(
        cls,
        func: FieldFunc,
        extent: float,
        n: int,
        *,
        domain: str = "disk",
        alpha: float = 0.0,
    ) -> GridField:
        """
        Sample ``func(x, y)`` on every node, ghost ring included.
        """
        x = np.linspace(-extent, extent, n)
        X, Y = np.meshgrid(x, x)
        return cls(func(X, Y), extent, domain=domain, alpha=alpha)

    def with_values(self, values: Any) -> GridField:
        """
        A field on the same grid with new values.
        """
        return GridField(values, self._extent, domain=self._domain, alpha=self._alpha, mask=self._mask)

    def __repr__(self) -> str:
        return f"GridField(n={self.n}, extent={self._extent}, domain={self._domain!r}, alpha={self._alpha})"

    def __hash__(self) -> int:
        return self._hash

    @property
    def values(self) -> np.ndarray:
        """
        Node values (read-only).
        """
        return self._values

    @values.setter
    def values(self, val: Any) -> None:
        """
        Raises an error.
        """
        raise RuntimeError("GridField instances are immutable")

    @property
    def extent(self) -> float:
        return self._extent

    @property
    def domain(self) -> str:
        return self._domain

    @property
    def alpha(self) -> float:
        return self._alpha

    @property
    def mask(self) -> np.ndarray:
        """
        Nodes inside the domain.
        """
        return self._mask

    @property
    def n(self) -> int:
        return int(self._values.shape[0])

    @property
    def spacing(self) -> float:
        """
        Grid spacing ``h = 2 extent / (n - 1)``.
        """
        return 2.0 * self._extent / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        """
        Node coordinates along each axis.
        """
        return np.linspace(-self._extent, self._extent, self.n)

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        ``(X, Y)`` node coordinate arrays.
        """
        return tuple(np.meshgrid(self.x, self.x))  # type: ignore[return-value]

    @cached_property
    def interior(self) -> np.ndarray:
        """
        Masked nodes whose four neighbours are also masked.
        """
        m = self._mask
        out = np.zeros_like(m)
        out[1:-1, 1:-1] = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
        return out

    @cached_property
    def deep_interior(self) -> np.ndarray:
        """
        Masked nodes whose eight neighbours are also masked.
        """
        m = self._mask
        out = np.zeros_like(m)
        core = m[1:-1, 1:-1].copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                core &= m[1 + di : m.shape[0] - 1 + di, 1 + dj : m.shape[1] - 1 + dj]
        out[1:-1, 1:-1] = core
        return out

    def sample(self, x: Any, y: Any) -> np.ndarray:
        """
        Bilinear interpolation; NaN outside the grid or next to NaN nodes.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = self.spacing
        n = self.n
        fx = (x + self._extent) / h
        fy = (y + self._extent) / h
        slack = 1e-9
        inside = (fx >= -slack) & (fx <= n - 1 + slack) & (fy >= -slack) & (fy <= n - 1 + slack)
        fx = np.clip(fx, 0.0, n - 1.0)
        fy = np.clip(fy, 0.0, n - 1.0)
        j0 = np.clip(np.floor(fx).astype(int), 0, n - 2)
        i0 = np.clip(np.floor(fy).astype(int), 0, n - 2)
        tx = fx - j0
        ty = fy - i0
        v = self._values
        out = np.zeros(np.broadcast(fx, fy).shape)
        for di, dj, wt in (
            (0, 0, (1 - tx) * (1 - ty)),
            (0, 1, tx * (1 - ty)),
            (1, 0, (1 - tx) * ty),
            (1, 1, tx * ty),
        ):
            corner = v[i0 + di, j0 + dj]
            out = out + np.where(wt == 0, 0.0, wt * np.where(np.isfinite(corner), corner, np.nan))
        return np.where(inside, out, np.nan)

    def to_dataarray(self) -> xr.DataArray:
        """
        The field as an `xarray.DataArray` with ``y``/``x`` coordinates.
        """
        return xr.DataArray(
            data=np.array(self._values),
            coords={"y": self.x, "x": self.x},
            dims=("y", "x"),
            attrs={"extent": self._extent, "domain": self._domain, "alpha": self._alpha},
        )

    def save(self, path: Path) -> None:
        """
        Save the field to a netCDF file.

        Parameters
        ----------
        path : pathlib.Path
            Path to save to. Should end in ``".nc"``.
        """
        da = self.to_dataarray()
        da.coords["mask"] = (("y", "x"), self._mask.astype(np.int8))
        da.to_netcdf(path)

    @classmethod
    def load(cls, path: Path) -> GridField:
        """
        Load a field saved by :meth:`save`.
        """
        da = xr.load_dataarray(path)
        return cls(
            da.data,
            float(da.attrs["extent"]),
            domain=str(da.attrs["domain"]),
            alpha=float(da.attrs["alpha"]),
            mask=da.coords["mask"].data.astype(bool),
        )


def interpolate(field: GridField, point: Point) -> float:
    """
    Bilinear interpolation of ``field`` at a point.

    Raises
    ------
    OutOfDomainError
        If the point is outside the grid or next to undefined nodes.
    """
    val = float(field.sample(point[0], point[1]))
    if not np.isfinite(val):
        raise OutOfDomainError(f"Point {tuple(point)} is outside the domain of {field!r}")
    return val


def dual_cell_weights(field: GridField, w: ConicalWeight) -> np.ndarray:
    """
    Average of the weight over each node's dual cell.

    Finite everywhere, including at a node placed on the cone point.
    """
    h = field.spacing
    edges = np.concatenate([field.x - 0.5 * h, [field.x[-1] + 0.5 * h]])
    if w.alpha == 0:
        return np.full(field.values.shape, w.prefactor)
    return cell_measures(edges, edges, w) / (h * h)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """
    A radial function sampled on increasing radii.

    Parameters
    ----------
    nodes : numpy.ndarray
        Strictly increasing non-negative radii.
    values : numpy.ndarray
        Samples at the nodes.
    alpha : float
        Exponent of the equation the profile belongs to.
    derivatives : numpy.ndarray, optional
        Radial derivatives at the nodes; enables Hermite interpolation.
    """

    nodes: np.ndarray
    values: np.ndarray
    alpha: float = 0.0
    derivatives: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or len(nodes) < 2:
            raise ValueError("nodes and values must be 1D arrays of the same length >= 2")
        if nodes[0] < 0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be non-negative and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if self.derivatives is not None:
            object.__setattr__(self, "derivatives", np.asarray(self.derivatives, dtype=float))

    @cached_property
    def _interpolant(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.derivatives is not None and np.all(np.isfinite(self.derivatives)):
            return CubicHermiteSpline(self.nodes, self.values, self.derivatives, extrapolate=False)  # type: ignore[no-any-return]
        return PchipInterpolator(self.nodes, self.values, extrapolate=False)  # type: ignore[no-any-return]

    def __call__(self, r: Any) -> np.ndarray:
        """
        Interpolated values; NaN outside ``[nodes[0], nodes[-1]]``.
        """
        return np.asarray(self._interpolant(np.asarray(r, dtype=float)))

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return len(self.nodes)


def circle_samples(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unit vectors at ``n`` equally spaced angles.
    """
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return np.cos(theta), np.sin(theta)


def winding_number(polyline: np.ndarray, point: Point) -> int:
    """
    Winding number of a closed polyline around a point.
    """
    rel = _closed(polyline) - np.asarray(point, dtype=float)
    return int(np.round(np.sum(_angle_between(rel[:-1], rel[1:])) / (2 * np.pi)))


def distance_to_polyline(polyline: np.ndarray, point: Point) -> float:
    """
    Euclidean distance from a point to a polyline.
    """
    pts = np.asarray(polyline, dtype=float)
    a, b = pts[:-1], pts[1:]
    d = b - a
    p = np.asarray(point, dtype=float)
    len2 = np.sum(d * d, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(len2 > 0, np.sum((p - a) * d, axis=1) / len2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * d
    return float(np.min(np.hypot(closest[:, 0] - p[0], closest[:, 1] - p[1])))


def signed_area(polyline: np.ndarray) -> float:
    """
    Unweighted signed (shoelace) area of a closed polyline.
    """
    pts = _closed(polyline)
    return 0.5 * float(np.sum(pts[:-1, 0] * pts[1:, 1] - pts[1:, 0] * pts[:-1, 1]))


def as_polylines(boundary: Union[np.ndarray, Sequence[np.ndarray]]) -> List[np.ndarray]:
    """
    Normalise a polyline or a sequence of polylines to a list of arrays.
    """
    if isinstance(boundary, np.ndarray) and boundary.ndim == 2:
        return [boundary]
    return [np.asarray(b, dtype=float) for b in boundary]
