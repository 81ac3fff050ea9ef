"""
Radial and two-dimensional solvers for ``-Laplace(u) = |x - c|^(2 alpha) K e^u``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable, Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve

from liouvillelab import defaults
from liouvillelab.core import ConicalWeight, GridField, RadialProfile, dual_cell_weights
from liouvillelab.exceptions import (
    BlowupOverflowError,
    DampingWarning,
    NonConvergenceError,
    OutOfDomainError,
)
from liouvillelab.potential import PotentialSpec

__all__ = [
    "RadialIVP",
    "Dirichlet2D",
    "solve_radial",
    "radial_mass",
    "solve_dirichlet",
    "residual",
    "profile_on_grid",
]

logger = logging.getLogger(__name__)

Boundary = Union[None, float, np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class RadialIVP:
    """
    Radial initial value problem ``(r u')' = -r^(1 + 2 alpha) K(r) e^u``, ``u(0) = M``.

    Parameters
    ----------
    alpha : float
        Cone exponent, in (-1, 0].
    K : PotentialSpec
        Radial potential centered at the origin.
    M : float
        Center value ``u(0)``.
    r_max : float
        Outer radius.
    tol : float
        Local error tolerance, in ``(0, 1e-2]``.
    n_out : int
        Number of output radii (merged with the potential's breakpoints).
    """

    alpha: float
    K: PotentialSpec
    M: float
    r_max: float
    tol: float = 1e-10
    n_out: int = 2001

    def __post_init__(self) -> None:
        ConicalWeight(self.alpha)
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if not (0 < self.tol <= 1e-2):
            raise ValueError(f"tol must lie in (0, 1e-2], got {self.tol}")
        if not self.K.is_radial or self.K.center != (0.0, 0.0):
            raise ValueError("The radial solver needs a radial potential centered at the origin")
        if self.n_out < 2:
            raise ValueError("n_out must be at least 2")

    @property
    def beta(self) -> float:
        return 2.0 + 2.0 * self.alpha

    def output_mesh(self, r_start: float) -> np.ndarray:
        """
        Output radii: uniform and geometric samples, the starter radius and the breakpoints.
        """
        half = max(self.n_out // 2, 2)
        pieces = [
            np.array([0.0, min(r_start, self.r_max), self.r_max]),
            np.linspace(0.0, self.r_max, half),
            np.geomspace(min(r_start, self.r_max), self.r_max, self.n_out - half),
            np.array([r for r in self.K.breakpoints if r < self.r_max]),
        ]
        return np.unique(np.concatenate(pieces))


def _series(c1: float, beta: float, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two-term expansion of ``(u, r u')`` at the origin.
    """
    rb = r**beta
    u = -c1 * rb + 0.25 * c1 * c1 * rb * rb
    w = -beta * c1 * rb + 0.5 * beta * c1 * c1 * rb * rb
    return u, w


def solve_radial(ivp: RadialIVP) -> RadialProfile:
    """
    Integrate a radial solution outwards from its center.

    The solution is started from its series expansion on ``[0, r_start]`` and
    continued with an explicit Runge-Kutta method of order 8 in the variables
    ``(u, r u')`` against ``log r``, restarting at every jump of the potential.

    Parameters
    ----------
    ivp : RadialIVP
        Problem definition.

    Returns
    -------
    RadialProfile
        Values on :meth:`RadialIVP.output_mesh`.

    Raises
    ------
    BlowupOverflowError
        If ``exp(u)`` overflows or the integrator fails; carries the radius
        reached.
    """
    beta = ivp.beta
    alpha = ivp.alpha
    K0 = float(ivp.K.radial(0.0))
    if ivp.M >= defaults.log_max_float:
        raise BlowupOverflowError(f"exp(M) overflows for M={ivp.M}", 0.0)
    source0 = K0 * math.exp(ivp.M)
    c1 = source0 / beta**2
    r_start = min(1e-3, ivp.tol ** (1.0 / beta), (ivp.tol * beta**2 / source0) ** (1.0 / beta), ivp.r_max)
    mesh = ivp.output_mesh(r_start)

    values = np.empty_like(mesh)
    wvals = np.empty_like(mesh)
    early = mesh <= r_start
    du, dw = _series(c1, beta, mesh[early])
    values[early] = ivp.M + du
    wvals[early] = dw

    def rhs(x: float, y: np.ndarray, k: float) -> np.ndarray:
        # x = log r, so du/dx = w and dw/dx = -r^beta K e^u
        u, w = y
        if u >= defaults.log_max_float:
            raise FloatingPointError("exp overflow")
        return np.array([w, -math.exp(beta * x) * k * math.exp(u)])

    u_s, w_s = _series(c1, beta, np.array([r_start]))
    y = np.array([ivp.M + u_s[0], w_s[0]])
    edges = [r_start] + [r for r in ivp.K.breakpoints if r_start < r < ivp.r_max] + [ivp.r_max]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        sel = (mesh > lo) & (mesh <= hi)
        try:
            sol = solve_ivp(
                rhs,
                (math.log(lo), math.log(hi)),
                y,
                method="DOP853",
                t_eval=np.log(mesh[sel]),
                rtol=ivp.tol,
                atol=ivp.tol,
                args=(float(ivp.K.radial(0.5 * (lo + hi))),),
            )
        except FloatingPointError as exc:
            raise BlowupOverflowError(f"exp(u) overflowed beyond r={lo:.6g}", lo) from exc
        if sol.status != 0:
            reached = math.exp(sol.t[-1]) if sol.t.size else lo
            raise BlowupOverflowError(f"Radial integration failed at r={reached:.6g}: {sol.message}", reached)
        values[sel] = sol.y[0]
        wvals[sel] = sol.y[1]
        y = sol.y[:, -1]
        logger.debug("radial segment [%.6g, %.6g]: %d steps", lo, hi, sol.nfev)

    if not np.all(np.isfinite(values)):
        bad = mesh[~np.isfinite(values)][0]
        raise BlowupOverflowError(f"Non-finite radial solution at r={bad:.6g}", float(bad))

    derivatives = None
    if alpha > -0.5:
        with np.errstate(divide="ignore", invalid="ignore"):
            derivatives = np.where(mesh > 0, wvals / mesh, 0.0)
    logger.info("solved radial problem alpha=%g M=%g on [0, %g] (%d nodes)", alpha, ivp.M, ivp.r_max, len(mesh))
    return RadialProfile(mesh, values, alpha=alpha, derivatives=derivatives)


def radial_mass(profile: RadialProfile, K: PotentialSpec, r: Any) -> Any:
    """
    Weighted mass ``2 pi int_0^r s^(1 + 2 alpha) K(s) e^(u(s)) ds`` of a radial profile.

    ``e^u`` is interpolated linearly on each mesh cell and ``K`` is taken at
    the cell midpoint; the power ``s^(1 + 2 alpha)`` is integrated exactly.

    Parameters
    ----------
    profile : RadialProfile
        Radial solution.
    K : PotentialSpec
        Radial potential, piecewise constant between profile nodes.
    r : float or array_like
        Radii up to the last profile node.

    Raises
    ------
    OutOfDomainError
        If a radius exceeds the last node.
    """
    if not K.is_radial:
        raise ValueError("radial_mass needs a radial potential")
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0) or np.any(rr > profile.r_max * (1 + 1e-12)):
        raise OutOfDomainError(f"Radii must lie in [0, {profile.r_max}]")
    rr = np.minimum(rr, profile.r_max)
    beta = 2.0 + 2.0 * profile.alpha
    nodes = profile.nodes
    f = np.exp(profile.values)
    kmid = np.asarray(K.radial(0.5 * (nodes[:-1] + nodes[1:])), dtype=float)
    slope = np.diff(f) / np.diff(nodes)
    intercept = f[:-1] - slope * nodes[:-1]

    def piece(lo: np.ndarray, hi: np.ndarray, cell: np.ndarray) -> np.ndarray:
        m0 = (hi**beta - lo**beta) / beta
        m1 = (hi ** (beta + 1.0) - lo ** (beta + 1.0)) / (beta + 1.0)
        return kmid[cell] * (intercept[cell] * m0 + slope[cell] * m1)

    cells = np.arange(len(nodes) - 1)
    cumulative = np.concatenate([[0.0], np.cumsum(piece(nodes[:-1], nodes[1:], cells))])
    idx = np.clip(np.searchsorted(nodes, rr, side="right") - 1, 0, len(nodes) - 2)
    out = 2.0 * np.pi * (cumulative[idx] + piece(nodes[idx], rr, idx))
    return float(out) if np.ndim(r) == 0 else out


def profile_on_grid(
    profile: RadialProfile,
    extent: float,
    n: int,
    *,
    center: Tuple[float, float] = (0.0, 0.0),
    domain: str = "disk",
) -> GridField:
    """
    Sample a radial profile on a grid; nodes beyond the profile are NaN.
    """
    x = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(x, x)
    values = profile(np.hypot(X - center[0], Y - center[1]))
    return GridField(values, extent, domain=domain, alpha=profile.alpha)


@dataclass(frozen=True, eq=False)
class Dirichlet2D:
    """
    Dirichlet problem on the masked nodes of a grid.

    Parameters
    ----------
    grid : GridField
        Geometry, initial guess on the masked nodes and, unless ``boundary``
        is given, the Dirichlet data on the unmasked nodes.
    alpha : float
        Cone exponent.
    K : PotentialSpec, optional
        Potential; ``None`` removes the source term (harmonic extension).
    boundary : float, array or callable, optional
        Dirichlet data overriding the unmasked node values.
    newton_tol : float
        Sup-norm tolerance on the discrete residual.
    max_iter : int
        Maximum Newton iterations.
    weight_center : tuple[float, float]
        Cone point.
    """

    grid: GridField
    alpha: float = 0.0
    K: Optional[PotentialSpec] = None
    boundary: Boundary = None
    newton_tol: float = defaults.newton_tol
    max_iter: int = defaults.newton_max_iter
    weight_center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        ConicalWeight(self.alpha, self.weight_center)
        if not self.newton_tol > 0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")

    @property
    def weight(self) -> ConicalWeight:
        return ConicalWeight(self.alpha, self.weight_center)

    def full_values(self) -> np.ndarray:
        """
        Initial guess on the mask and Dirichlet data elsewhere.
        """
        vals = np.array(self.grid.values, dtype=float)
        outside = ~self.grid.mask
        if self.boundary is None:
            pass
        elif callable(self.boundary):
            X, Y = self.grid.coordinates
            vals[outside] = np.asarray(self.boundary(X, Y), dtype=float)[outside]
        else:
            vals[outside] = np.broadcast_to(np.asarray(self.boundary, dtype=float), vals.shape)[outside]
        return vals


def _source_coefficient(field: GridField, alpha: float, K: Optional[PotentialSpec], center: Tuple[float, float]) -> np.ndarray:
    if K is None:
        return np.zeros(field.values.shape)
    return dual_cell_weights(field, ConicalWeight(alpha, center)) * K.on_grid(field)


def _neg_laplacian(values: np.ndarray, h: float) -> np.ndarray:
    out = np.full(values.shape, np.nan)
    out[1:-1, 1:-1] = (
        4.0 * values[1:-1, 1:-1] - values[:-2, 1:-1] - values[2:, 1:-1] - values[1:-1, :-2] - values[1:-1, 2:]
    ) / (h * h)
    return out


def solve_dirichlet(problem: Dirichlet2D) -> GridField:
    """
    Solve the Dirichlet problem with a damped Newton method.

    The operator is the 5-point Laplacian; the source at each node uses the
    weight averaged exactly over the node's dual cell.

    Parameters
    ----------
    problem : Dirichlet2D
        Problem definition.

    Returns
    -------
    GridField
        Solution on the masked nodes, Dirichlet data elsewhere.

    Raises
    ------
    NonConvergenceError
        If the residual is above ``newton_tol`` after ``max_iter`` iterations.
    """
    grid = problem.grid
    n = grid.n
    h = grid.spacing
    # nodes on the edge of the grid always carry Dirichlet data
    mask = grid.mask.copy()
    mask[[0, -1], :] = False
    mask[:, [0, -1]] = False
    vals = problem.full_values()

    index = -np.ones((n, n), dtype=int)
    index[mask] = np.arange(int(mask.sum()))
    n_unknowns = int(mask.sum())
    rows, cols, data = [np.arange(n_unknowns)], [np.arange(n_unknowns)], [np.full(n_unknowns, 4.0 / h**2)]
    rhs = np.zeros(n_unknowns)
    ii, jj = np.nonzero(mask)
    for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ni, nj = ii + di, jj + dj
        nb = index[ni, nj]
        inside = nb >= 0
        rows.append(index[ii[inside], jj[inside]])
        cols.append(nb[inside])
        data.append(np.full(int(inside.sum()), -1.0 / h**2))
        ghost = vals[ni[~inside], nj[~inside]]
        if not np.all(np.isfinite(ghost)):
            raise ValueError("Dirichlet data must be finite on every node next to the domain")
        np.add.at(rhs, index[ii[~inside], jj[~inside]], ghost / h**2)
    A = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n_unknowns, n_unknowns)
    )
    s = _source_coefficient(grid, problem.alpha, problem.K, problem.weight_center)[mask]

    def F(u: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return A @ u - rhs - s * np.exp(u)

    def norm(r: np.ndarray) -> float:
        val = float(np.max(np.abs(r))) if r.size else 0.0
        return val if np.isfinite(val) else math.inf

    u = vals[mask]
    res = F(u)
    res_norm = norm(res)
    for it in range(problem.max_iter):
        logger.info("Newton iteration %d: residual %.3e", it, res_norm)
        if res_norm <= problem.newton_tol:
            break
        with np.errstate(over="ignore"):
            J = A - sparse.diags(s * np.exp(u))
        step = spsolve(J.tocsc(), -res)
        t = 1.0
        for _ in range(defaults.newton_max_halvings + 1):
            trial = u + t * step
            trial_res = F(trial)
            trial_norm = norm(trial_res)
            if trial_norm < res_norm:
                break
            t *= 0.5
        else:
            warnings.warn(
                f"Newton step halving exhausted at residual {res_norm:.3e}", DampingWarning, stacklevel=2
            )
        u, res, res_norm = trial, trial_res, trial_norm
    if res_norm > problem.newton_tol:
        raise NonConvergenceError(
            f"Newton did not converge in {problem.max_iter} iterations (residual {res_norm:.3e})", res_norm
        )
    out = vals.copy()
    out[mask] = u
    return GridField(out, grid.extent, domain=grid.domain, alpha=problem.alpha, mask=mask)


def residual(
    field: GridField,
    alpha: float,
    K: Optional[PotentialSpec],
    *,
    center: Tuple[float, float] = (0.0, 0.0),
) -> GridField:
    """
    Discrete residual ``-Laplace_h u - <|x - c|^(2 alpha)> K e^u`` per node.

    The weight is averaged over each node's dual cell. Defined on masked
    nodes whose four neighbours hold finite values.
    """
    vals = field.values
    with np.errstate(over="ignore", invalid="ignore"):
        res = _neg_laplacian(vals, field.spacing) - _source_coefficient(field, alpha, K, center) * np.exp(vals)
    valid = field.mask & np.isfinite(res)
    res = np.where(valid, res, np.nan)
    return GridField(res, field.extent, domain=field.domain, alpha=alpha, mask=valid)
