"""
The explicit radial solution family, its limit bubble and the sup+inf constants.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import integrate

from liouvillelab.core import RadialProfile
from liouvillelab.exceptions import NumericalError, OutOfDomainError, QuadratureError
from liouvillelab.potential import RadialPotential, family_potential

__all__ = [
    "BubbleParams",
    "family_u",
    "family_du",
    "family_K",
    "family_mass",
    "family_profile",
    "limit_bubble",
    "limit_bubble_du",
    "bubble_mass",
    "centered_bubble",
    "supinf_combination",
    "supinf_bound",
    "bubble_total_curvature",
]

logger = logging.getLogger(__name__)

_R_SLACK = 1e-12


def _log1p_exp(x: Any) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _log_r(r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(r)


def _check_alpha_ab(alpha: float, a: float, b: float) -> None:
    if not (-1.0 < alpha <= 0.0):
        raise ValueError(f"alpha must lie in (-1, 0], got {alpha}")
    if not (0 < a <= b):
        raise ValueError(f"Need 0 < a <= b, got a={a}, b={b}")


@dataclass(frozen=True)
class BubbleParams:
    """
    Parameters of the explicit family.

    Member ``n`` solves the equation on the unit disk with the potential equal
    to ``b`` on ``|x| < 1/n`` and ``a`` outside.

    Parameters
    ----------
    alpha : float
        Cone exponent, in (-1, 0].
    a, b : float
        Potential values, ``0 < a <= b``.
    n : float
        Family index, ``n >= 1``; real-valued.
    """

    alpha: float
    a: float
    b: float
    n: float = 1.0

    def __post_init__(self) -> None:
        _check_alpha_ab(self.alpha, self.a, self.b)
        if not self.n >= 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    @property
    def k(self) -> float:
        """
        ``2 (1 + alpha)``.
        """
        return 2.0 * (1.0 + self.alpha)

    @property
    def root(self) -> float:
        """
        ``sqrt(a / b)``.
        """
        return math.sqrt(self.a / self.b)

    @property
    def log_scale(self) -> float:
        """
        ``log(8 (1 + alpha)^2 / b)``.
        """
        return math.log(8.0 * (1.0 + self.alpha) ** 2 / self.b)

    @property
    def sigma_bar(self) -> float:
        return self.b / self.a

    @property
    def potential(self) -> RadialPotential:
        return family_potential(self.a, self.b, self.n)


def _check_unit(r: np.ndarray) -> None:
    if np.any(r < 0) or np.any(r > 1.0 + _R_SLACK):
        raise OutOfDomainError(f"Radii must lie in [0, 1], got range [{np.min(r)}, {np.max(r)}]")


def _family_log(alpha: float, a: float, b: float, n: float, r: np.ndarray) -> np.ndarray:
    k = 2.0 * (1.0 + alpha)
    s = math.sqrt(a / b)
    L = math.log(8.0 * (1.0 + alpha) ** 2 / b)
    logn = math.log(n)
    logr = _log_r(r)
    inner = L + k * logn - 2.0 * _log1p_exp(k * (logn + logr))
    with np.errstate(invalid="ignore"):
        outer = L + k * s * logn + k * (s - 1.0) * logr - 2.0 * _log1p_exp(k * s * (logn + logr))
    return np.where(r < 1.0 / n, inner, outer)


def family_u(p: BubbleParams, r: Any, *, extend: bool = False) -> Any:
    """
    Member ``n`` of the explicit family at radius ``r``.

    Parameters
    ----------
    p : BubbleParams
        Family parameters.
    r : float or array_like
        Radii in ``[0, 1]``.
    extend : bool
        Continue the outer formula beyond the unit disk, for ghost nodes.

    Raises
    ------
    OutOfDomainError
        If a radius is outside ``[0, 1]``.
    """
    rr = np.asarray(r, dtype=float)
    if extend:
        if np.any(rr < 0):
            raise OutOfDomainError("Radii must be non-negative")
    else:
        _check_unit(rr)
    out = _family_log(p.alpha, p.a, p.b, p.n, rr)
    return float(out) if np.ndim(r) == 0 else out


def family_du(p: BubbleParams, r: Any) -> Any:
    """
    Radial derivative of :func:`family_u`; one-sided from the left at ``1/n``.
    """
    rr = np.asarray(r, dtype=float)
    _check_unit(rr)
    k, s = p.k, p.root
    with np.errstate(divide="ignore", invalid="ignore"):
        y = (p.n * rr) ** k
        inner = -2.0 * k * y / (rr * (1.0 + y))
        ys = (p.n * rr) ** (k * s)
        outer = k * (s - 1.0) / rr - 2.0 * k * s * ys / (rr * (1.0 + ys))
    out = np.where(rr <= 1.0 / p.n, np.where(rr > 0, inner, _slope_at_origin(k, p.n)), outer)
    return float(out) if np.ndim(r) == 0 else out


def _slope_at_origin(k: float, n: float) -> float:
    # u' ~ -2 k n^k r^(k - 1) near the origin
    if k > 1.0:
        return 0.0
    if k == 1.0:
        return -2.0 * k * n**k
    return -math.inf


def family_K(p: BubbleParams, r: Any) -> Any:
    """
    Potential of member ``n``: ``b`` for ``r < 1/n``, ``a`` otherwise.
    """
    rr = np.asarray(r, dtype=float)
    _check_unit(rr)
    out = np.where(rr < 1.0 / p.n, p.b, p.a)
    return float(out) if np.ndim(r) == 0 else out


def _mass(alpha: float, a: float, b: float, n: float, r: np.ndarray) -> np.ndarray:
    """
    ``int_{|x| < r} |x|^(2 alpha) K e^u`` for the family (n) or the bubble (n = 1).
    """
    k = 2.0 * (1.0 + alpha)
    s = math.sqrt(a / b)
    c = 4.0 * math.pi * (1.0 + alpha)
    nr = n * r
    with np.errstate(over="ignore"):
        y = nr**k
        inner = 2.0 * c * y / (1.0 + y)
        outer = c + 2.0 * c * s * (0.5 - 1.0 / (1.0 + nr ** (k * s)))
    return np.where(nr < 1.0, inner, outer)


def family_mass(p: BubbleParams, r: Any) -> Any:
    """
    Exact weighted mass ``int_{|x| < r} |x|^(2 alpha) K_n e^(u_n) dx``.
    """
    rr = np.asarray(r, dtype=float)
    _check_unit(rr)
    out = _mass(p.alpha, p.a, p.b, p.n, rr)
    return float(out) if np.ndim(r) == 0 else out


def family_profile(p: BubbleParams, n_nodes: int = 4001) -> RadialProfile:
    """
    Member ``n`` on a mesh refined around ``r = 1/n``.
    """
    kink = 1.0 / p.n
    inner = kink * np.linspace(0.0, 1.0, n_nodes // 2, endpoint=False)
    if kink < 1.0:
        outer = np.geomspace(kink, 1.0, n_nodes - len(inner))
    else:
        outer = np.array([1.0])
    nodes = np.concatenate([inner, outer])
    return RadialProfile(nodes, np.asarray(family_u(p, nodes)), alpha=p.alpha)


def limit_bubble(alpha: float, a: float, b: float, r: Any) -> Any:
    """
    The entire radial solution ``U`` with potential ``b`` on the unit disk and ``a`` outside.

    Parameters
    ----------
    alpha : float
        Cone exponent.
    a, b : float
        Potential values.
    r : float or array_like
        Non-negative radii.
    """
    _check_alpha_ab(alpha, a, b)
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0):
        raise OutOfDomainError("Radii must be non-negative")
    out = _family_log(alpha, a, b, 1.0, rr)
    return float(out) if np.ndim(r) == 0 else out


def limit_bubble_du(alpha: float, a: float, b: float, r: Any) -> Any:
    """
    Radial derivative of :func:`limit_bubble`.
    """
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0):
        raise OutOfDomainError("Radii must be non-negative")
    k, s = 2.0 * (1.0 + alpha), math.sqrt(a / b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        y = rr**k
        inner = -2.0 * k * y / (rr * (1.0 + y))
        ys = rr ** (k * s)
        outer = k * (s - 1.0) / rr - 2.0 * k * s / (rr * (1.0 + 1.0 / ys))
    out = np.where(rr < 1.0, np.where(rr > 0, inner, _slope_at_origin(k, 1.0)), outer)
    return float(out) if np.ndim(r) == 0 else out


def bubble_mass(alpha: float, a: float, b: float, r: Any) -> Any:
    """
    Exact weighted mass of :func:`limit_bubble` inside radius ``r``.
    """
    _check_alpha_ab(alpha, a, b)
    rr = np.asarray(r, dtype=float)
    out = _mass(alpha, a, b, 1.0, rr)
    return float(out) if np.ndim(r) == 0 else out


def centered_bubble(alpha: float, b: float, M: float, r: Any) -> Any:
    """
    The radial solution with constant potential ``b`` and peak value ``M``.

    Equal to ``log(8 (1 + alpha)^2 b^-1 mu^k / (1 + mu^k r^k)^2)`` with
    ``k = 2 (1 + alpha)`` and ``mu^k = e^M b / (8 (1 + alpha)^2)``.
    """
    _check_alpha_ab(alpha, b, b)
    k = 2.0 * (1.0 + alpha)
    log_muk = M + math.log(b / (8.0 * (1.0 + alpha) ** 2))
    rr = np.asarray(r, dtype=float)
    out = M - 2.0 * _log1p_exp(log_muk + k * _log_r(rr))
    return float(out) if np.ndim(r) == 0 else out


def supinf_combination(p: BubbleParams) -> float:
    """
    ``sqrt(a/b) u_n(0) + u_n(1)`` for the explicit family.

    Evaluated in closed form and cross-checked against :func:`family_u`.

    Raises
    ------
    NumericalError
        If the two evaluations differ by more than ``1e-10``.
    """
    s, k, L = p.root, p.k, p.log_scale
    logn = math.log(p.n)
    closed = (s + 1.0) * L + 2.0 * k * s * logn - 2.0 * float(_log1p_exp(k * s * logn))
    direct = s * family_u(p, 0.0) + family_u(p, 1.0)
    if abs(closed - direct) > 1e-10 * max(1.0, abs(closed)):
        raise NumericalError(f"sup+inf closed form {closed!r} disagrees with direct evaluation {direct!r}")
    return closed


def supinf_bound(alpha: float, a: float, b: float) -> float:
    """
    ``(sqrt(a/b) + 1) log(8 (1 + alpha)^2 / b)``.
    """
    _check_alpha_ab(alpha, a, b)
    return (math.sqrt(a / b) + 1.0) * math.log(8.0 * (1.0 + alpha) ** 2 / b)


def bubble_total_curvature(alpha: float, a: float, b: float, r_max: float = 1e3, tol: float = 1e-9) -> float:
    """
    Total curvature ``int |x|^(2 alpha) K e^U`` of the limit bubble.

    The integral over ``[0, r_max]`` is computed by adaptive quadrature, with
    the ``r^(1 + 2 alpha)`` factor handled by an algebraic weight on the unit
    disk and a logarithmic substitution outside; the analytic tail beyond
    ``r_max`` is added.

    Parameters
    ----------
    alpha : float
        Cone exponent.
    a, b : float
        Potential values.
    r_max : float
        Quadrature cut-off, at least 10.
    tol : float
        Absolute tolerance.

    Returns
    -------
    float
        Approximately ``4 pi (1 + alpha) (1 + sqrt(a/b))``.

    Raises
    ------
    QuadratureError
        If the estimated quadrature error exceeds ``tol``.
    """
    _check_alpha_ab(alpha, a, b)
    if r_max < 10:
        raise ValueError(f"r_max must be at least 10, got {r_max}")
    k, s = 2.0 * (1.0 + alpha), math.sqrt(a / b)
    pref = 16.0 * math.pi * (1.0 + alpha) ** 2

    inner, err_in = integrate.quad(
        lambda r: pref / (1.0 + r**k) ** 2,
        0.0,
        1.0,
        weight="alg",
        wvar=(1.0 + 2.0 * alpha, 0.0),
        epsabs=0.1 * tol,
        epsrel=0.0,
        limit=200,
    )

    def outer_integrand(x: float) -> float:
        y = math.exp(-k * s * x)
        return pref * s * s * y / (1.0 + y) ** 2

    outer, err_out = integrate.quad(outer_integrand, 0.0, math.log(r_max), epsabs=0.1 * tol, epsrel=0.0, limit=400)
    tail = 8.0 * math.pi * (1.0 + alpha) * s / (1.0 + r_max ** (k * s))
    total = inner + outer + tail
    err = err_in + err_out
    logger.debug("bubble total curvature %.15g (estimated error %.2e)", total, err)
    if err > tol:
        raise QuadratureError(f"Total curvature quadrature reached error {err:.3g} > {tol:.3g}", err, total)
    return total
