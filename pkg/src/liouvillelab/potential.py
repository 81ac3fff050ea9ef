"""
Potentials ``K`` of the Liouville equation.
"""
from __future__ import annotations

import logging
import weakref
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from liouvillelab.core import ConicalWeight, GridField, polygon_weighted_area, polygon_weighted_integral
from liouvillelab.exceptions import InvalidPotentialError

__all__ = [
    "PotentialSpec",
    "ConstantPotential",
    "RadialPotential",
    "SampledPotential",
    "family_potential",
    "K1Report",
    "k1_condition_check",
]

logger = logging.getLogger(__name__)


class PotentialSpec(ABC):
    """
    A potential ``K`` with bounds ``0 < a <= K <= b``.

    Parameters
    ----------
    a, b : float
        Lower and upper bounds.
    sigma_bar : float, optional
        Oscillation constant, at least 1. Defaults to ``b / a``, for which the
        ratio condition ``K(x) / K(y) <= sigma_bar + B / |log|x - y||`` always
        holds.
    B : float
        Logarithmic modulus, non-negative.
    rho_bar : float
        Range of the ratio condition, in ``(0, 1/2]``.
    """

    def __init__(
        self,
        *,
        a: float,
        b: float,
        sigma_bar: Optional[float] = None,
        B: float = 0.0,
        rho_bar: float = 0.5,
    ):
        if not (0 < a <= b < np.inf):
            raise InvalidPotentialError(f"Bounds must satisfy 0 < a <= b < inf, got a={a}, b={b}")
        if sigma_bar is None:
            sigma_bar = b / a
        if not sigma_bar >= 1:
            raise InvalidPotentialError(f"sigma_bar must be >= 1, got {sigma_bar}")
        if not B >= 0:
            raise InvalidPotentialError(f"B must be >= 0, got {B}")
        if not (0 < rho_bar <= 0.5):
            raise InvalidPotentialError(f"rho_bar must lie in (0, 1/2], got {rho_bar}")
        self._a = float(a)
        self._b = float(b)
        self._sigma_bar = float(sigma_bar)
        self._B = float(B)
        self._rho_bar = float(rho_bar)
        self._hash = id(self)
        self._grid_cache: weakref.WeakKeyDictionary[GridField, np.ndarray] = weakref.WeakKeyDictionary()

    def __hash__(self) -> int:
        return self._hash

    def __getstate__(self) -> Dict[str, Any]:
        state = self.__dict__.copy()
        del state["_grid_cache"]
        return state

    def __setstate__(self, state: Dict[str, Any]) -> None:
        self.__dict__.update(state)
        self._hash = id(self)
        self._grid_cache = weakref.WeakKeyDictionary()

    @property
    @abstractmethod
    def kind(self) -> str:
        """
        One of ``"constant"``, ``"piecewise-radial"`` or ``"sampled"``.
        """

    @abstractmethod
    def __call__(self, x: Any, y: Any) -> np.ndarray:
        """
        Evaluate the potential at points.
        """

    @property
    def a(self) -> float:
        return self._a

    @property
    def b(self) -> float:
        return self._b

    @property
    def sigma_bar(self) -> float:
        return self._sigma_bar

    @property
    def B(self) -> float:
        return self._B

    @property
    def rho_bar(self) -> float:
        return self._rho_bar

    @property
    def is_radial(self) -> bool:
        return False

    @property
    def center(self) -> Tuple[float, float]:
        """
        Symmetry center of a radial potential.
        """
        return (0.0, 0.0)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """
        Radii where a radial potential jumps.
        """
        return ()

    def radial(self, r: Any) -> np.ndarray:
        """
        Evaluate a radial potential as a function of the distance to its center.
        """
        raise TypeError(f"{type(self).__name__} is not radial")

    def on_grid(self, field: GridField) -> np.ndarray:
        """
        Potential at every node of a grid.

        The read-only array is cached for as long as ``field`` is alive.
        """
        vals = self._grid_cache.get(field)
        if vals is None:
            X, Y = field.coordinates
            vals = np.array(self(X, Y), dtype=float)
            vals.flags.writeable = False
            self._grid_cache[field] = vals
        return vals

    def polygon_mass(self, vertices: np.ndarray, w: ConicalWeight) -> float:
        """
        Signed integral of ``K`` against the weighted measure over a polygon.
        """
        return polygon_weighted_integral(vertices, w, self)

    def _check_range(self, values: np.ndarray) -> None:
        values = values[np.isfinite(values)]
        if values.size and (np.min(values) < self._a * (1 - 1e-12) or np.max(values) > self._b * (1 + 1e-12)):
            raise InvalidPotentialError(
                f"Potential values span [{np.min(values)}, {np.max(values)}], outside [a, b] = [{self._a}, {self._b}]"
            )


class ConstantPotential(PotentialSpec):
    """
    A constant potential.

    Parameters
    ----------
    value : float
        The constant.
    **kwargs
        Bounds and oscillation constants; ``a`` and ``b`` default to ``value``.
    """

    def __init__(self, value: float, **kwargs: Any):
        kwargs.setdefault("a", value)
        kwargs.setdefault("b", value)
        super().__init__(**kwargs)
        self._value = float(value)
        self._check_range(np.array([self._value]))

    def __repr__(self) -> str:
        return f"ConstantPotential({self._value})"

    @property
    def kind(self) -> str:
        return "constant"

    @property
    def value(self) -> float:
        return self._value

    @property
    def is_radial(self) -> bool:
        return True

    def __call__(self, x: Any, y: Any) -> np.ndarray:
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, self._value)

    def radial(self, r: Any) -> np.ndarray:
        return np.full(np.shape(r), self._value)

    def polygon_mass(self, vertices: np.ndarray, w: ConicalWeight) -> float:
        return self._value * polygon_weighted_area(vertices, w)


class RadialPotential(PotentialSpec):
    """
    A piecewise constant radial potential.

    ``K = values[k]`` on the annulus ``breakpoints[k-1] <= |x - center| < breakpoints[k]``.

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing positive radii.
    values : sequence of float
        One more value than breakpoints.
    center : tuple[float, float]
        Symmetry center.
    **kwargs
        Bounds and oscillation constants; ``a`` and ``b`` default to the
        extreme values.
    """

    def __init__(
        self,
        breakpoints: Sequence[float],
        values: Sequence[float],
        *,
        center: Tuple[float, float] = (0.0, 0.0),
        **kwargs: Any,
    ):
        br = np.asarray(breakpoints, dtype=float)
        vals = np.asarray(values, dtype=float)
        if br.ndim != 1 or vals.ndim != 1 or len(vals) != len(br) + 1:
            raise InvalidPotentialError("values must have exactly one more entry than breakpoints")
        if np.any(br <= 0) or np.any(np.diff(br) <= 0):
            raise InvalidPotentialError("breakpoints must be positive and strictly increasing")
        kwargs.setdefault("a", float(np.min(vals)))
        kwargs.setdefault("b", float(np.max(vals)))
        super().__init__(**kwargs)
        self._check_range(vals)
        self._breakpoints = br
        self._values = vals
        self._center = (float(center[0]), float(center[1]))

    def __repr__(self) -> str:
        return f"RadialPotential(breakpoints={self._breakpoints.tolist()}, values={self._values.tolist()})"

    @property
    def kind(self) -> str:
        return "piecewise-radial"

    @property
    def is_radial(self) -> bool:
        return True

    @property
    def center(self) -> Tuple[float, float]:
        return self._center

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(float(r) for r in self._breakpoints)

    @property
    def values(self) -> np.ndarray:
        return self._values

    def radial(self, r: Any) -> np.ndarray:
        idx = np.searchsorted(self._breakpoints, np.asarray(r, dtype=float), side="right")
        return self._values[idx]

    def __call__(self, x: Any, y: Any) -> np.ndarray:
        return self.radial(np.hypot(np.asarray(x) - self._center[0], np.asarray(y) - self._center[1]))

    def polygon_mass(self, vertices: np.ndarray, w: ConicalWeight) -> float:
        """
        Exact when the weight shares the potential's center.
        """
        if w.center != self._center:
            return super().polygon_mass(vertices, w)
        total = self._values[-1] * polygon_weighted_area(vertices, w)
        # telescoping sum over the disks inside each breakpoint
        for radius, inner, outer in zip(self._breakpoints, self._values[:-1], self._values[1:]):
            if inner != outer:
                total += (inner - outer) * polygon_weighted_area(vertices, w, clip_radius=float(radius))
        return float(total)


class SampledPotential(PotentialSpec):
    """
    A potential sampled on a grid and interpolated bilinearly.

    Parameters
    ----------
    field : GridField
        Samples of ``K``.
    **kwargs
        Bounds and oscillation constants; ``a`` and ``b`` default to the
        extreme sampled values.
    """

    def __init__(self, field: GridField, **kwargs: Any):
        finite = field.values[np.isfinite(field.values)]
        if not finite.size:
            raise InvalidPotentialError("A sampled potential needs finite values")
        kwargs.setdefault("a", float(np.min(finite)))
        kwargs.setdefault("b", float(np.max(finite)))
        super().__init__(**kwargs)
        self._check_range(field.values)
        self._field = field

    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray, np.ndarray], np.ndarray], extent: float, n: int, **kwargs: Any
    ) -> SampledPotential:
        """
        Sample ``func`` on a square grid over ``[-extent, extent]^2``.
        """
        return cls(GridField.from_function(func, extent, n, domain="square"), **kwargs)

    def __repr__(self) -> str:
        return f"SampledPotential({self._field!r})"

    @property
    def kind(self) -> str:
        return "sampled"

    @property
    def field(self) -> GridField:
        return self._field

    def __call__(self, x: Any, y: Any) -> np.ndarray:
        return self._field.sample(x, y)


def family_potential(a: float, b: float, n: float) -> RadialPotential:
    """
    The potential ``b`` on ``|x| < 1/n`` and ``a`` outside.
    """
    return RadialPotential([1.0 / n], [b, a], a=a, b=b, sigma_bar=b / a)


@dataclass(frozen=True)
class K1Report:
    """
    Result of :func:`k1_condition_check`.

    Attributes
    ----------
    sigma_bar : float
        Smallest ``sigma_bar >= 1`` for which the ratio condition holds on the
        sampled pairs.
    worst_pair : tuple
        The two points attaining it.
    n_pairs : int
        Number of pairs tested.
    """

    sigma_bar: float
    worst_pair: Tuple[Tuple[float, float], Tuple[float, float]]
    n_pairs: int


def k1_condition_check(
    K: PotentialSpec,
    *,
    extent: float = 1.0,
    n: int = 41,
    B: Optional[float] = None,
    rho_bar: Optional[float] = None,
) -> K1Report:
    """
    Empirical oscillation constant of a potential.

    Evaluates ``K(x) / K(y) - B / |log|x - y||`` over all pairs of nodes of an
    ``n x n`` grid on ``[-extent, extent]^2`` with ``|x - y| <= rho_bar``.

    Parameters
    ----------
    K : PotentialSpec
        Potential to test.
    extent : float
        Half-width of the sampled square.
    n : int
        Samples per axis.
    B, rho_bar : float, optional
        Override the potential's own constants.
    """
    B = K.B if B is None else B
    rho_bar = K.rho_bar if rho_bar is None else rho_bar
    x = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(x, x)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    vals = np.asarray(K(pts[:, 0], pts[:, 1]), dtype=float)
    keep = np.isfinite(vals)
    pts, vals = pts[keep], vals[keep]

    best = 1.0
    best_pair = ((float(pts[0, 0]), float(pts[0, 1])), (float(pts[0, 0]), float(pts[0, 1])))
    n_pairs = 0
    for i in range(len(pts)):
        d = np.hypot(pts[:, 0] - pts[i, 0], pts[:, 1] - pts[i, 1])
        near = (d > 0) & (d <= rho_bar)
        if not np.any(near):
            continue
        n_pairs += int(np.sum(near))
        ratio = vals[i] / vals[near] - B / np.abs(np.log(d[near]))
        j = int(np.argmax(ratio))
        if ratio[j] > best:
            best = float(ratio[j])
            other = pts[near][j]
            best_pair = ((float(pts[i, 0]), float(pts[i, 1])), (float(other[0]), float(other[1])))
    logger.debug("k1 check: sigma_bar %.6g over %d pairs", best, n_pairs)
    return K1Report(best, best_pair, n_pairs)
