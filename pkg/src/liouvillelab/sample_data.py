"""
Synthetic sample fields and boundaries.
"""
from typing import List, Tuple

import numpy as np

from liouvillelab.closed_form import BubbleParams, centered_bubble, family_u
from liouvillelab.core import Disk, GridField

__all__ = [
    "bubble_field",
    "family_field",
    "two_bump_field",
    "plateau_field",
    "circle_boundary",
    "square_boundary",
    "annulus_boundary",
    "figure_eight_boundary",
]


def bubble_field(
    alpha: float = 0.0,
    b: float = 1.0,
    M: float = 3.0,
    *,
    extent: float = 1.0,
    n: int = 129,
    center: Tuple[float, float] = (0.0, 0.0),
) -> GridField:
    """
    The radial solution with constant potential ``b`` and peak ``M``, sampled on every node.
    """
    return GridField.from_function(
        lambda x, y: centered_bubble(alpha, b, M, np.hypot(x - center[0], y - center[1])),
        extent,
        n,
        alpha=alpha,
    )


def family_field(p: BubbleParams, *, n: int = 129) -> GridField:
    """
    A member of the explicit family on the unit disk; ghost nodes continue the outer formula.
    """
    return GridField.from_function(lambda x, y: family_u(p, np.hypot(x, y), extend=True), 1.0, n, alpha=p.alpha)


def two_bump_field(*, n: int = 129, separation: float = 0.8, width: float = 0.05) -> GridField:
    """
    Two Gaussian bumps of height 1 on the unit disk.

    Levels between about ``2 exp(-separation^2 / (4 width))`` and 1 have two
    disjoint superlevel components.
    """
    h = 0.5 * separation

    def func(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(-((x - h) ** 2 + y**2) / width) + np.exp(-((x + h) ** 2 + y**2) / width)

    return GridField.from_function(func, 1.0, n)


def plateau_field(*, n: int = 129, level: float = 0.8, r_in: float = 0.2, r_out: float = 0.5) -> GridField:
    """
    A radially non-increasing field, constant at ``level`` on an annulus.
    """

    def func(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = np.hypot(x, y)
        return np.where(r < r_in, level + (r_in - r), np.where(r < r_out, level, level - (r - r_out)))

    return GridField.from_function(func, 1.0, n)


def circle_boundary(
    center: Tuple[float, float] = (0.0, 0.0), radius: float = 1.0, n_segments: int = 4096
) -> np.ndarray:
    return Disk(center, radius).polyline(n_segments)


def square_boundary(half_width: float = 0.5, center: Tuple[float, float] = (0.0, 0.0), n_per_side: int = 64) -> np.ndarray:
    """
    Closed counter-clockwise square, each side split into ``n_per_side`` segments.
    """
    t = np.linspace(-half_width, half_width, n_per_side, endpoint=False)
    w = half_width
    sides = [
        np.column_stack([t, np.full_like(t, -w)]),
        np.column_stack([np.full_like(t, w), t]),
        np.column_stack([-t, np.full_like(t, w)]),
        np.column_stack([np.full_like(t, -w), -t]),
    ]
    pts = np.vstack(sides + [sides[0][:1]])
    return pts + np.asarray(center)


def annulus_boundary(r_inner: float = 1.0, r_outer: float = 2.0, n_segments: int = 4096) -> List[np.ndarray]:
    """
    Outer ring counter-clockwise, inner ring clockwise.
    """
    outer = Disk((0.0, 0.0), r_outer).polyline(n_segments)
    inner = Disk((0.0, 0.0), r_inner).polyline(n_segments)[::-1].copy()
    return [outer, inner]


def figure_eight_boundary(n_segments: int = 256) -> np.ndarray:
    """
    A closed lemniscate, self-intersecting at the origin.
    """
    t = np.linspace(0.0, 2 * np.pi, n_segments + 1)
    # shifted so no vertex sits exactly on the crossing
    t = t + 0.5 * (t[1] - t[0])
    pts = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])
    pts[-1] = pts[0]
    return pts
