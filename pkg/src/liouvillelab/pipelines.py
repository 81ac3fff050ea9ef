"""
Command pipelines and the reproduction suite.

Every pipeline takes a flat parameter mapping and returns a `PipelineResult`
holding its tables, named pass/fail checks and any fields to save.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd

from liouvillelab import defaults
from liouvillelab.blowup import (
    analyze_blowup,
    blowup_scales,
    critical_radius,
    rescale,
)
from liouvillelab.checks import huber_check, level_measure_decay, supinf_eval, supxinf_eval, suzuki_check
from liouvillelab.closed_form import (
    BubbleParams,
    bubble_total_curvature,
    centered_bubble,
    family_profile,
    family_u,
    limit_bubble,
    limit_bubble_du,
    supinf_bound,
    supinf_combination,
)
from liouvillelab.core import ConicalWeight, Disk, GridField, Point, RadialProfile, disk_weighted_integral
from liouvillelab.exceptions import NumericalError
from liouvillelab.io import load_boundary, load_field
from liouvillelab.potential import ConstantPotential, PotentialSpec, RadialPotential, family_potential
from liouvillelab.rearrangement import (
    audit_differential_inequality,
    audit_huber_levels,
    audit_khat_bounds,
    distribution_function,
    integrated_bound_fit,
    rearrange,
    rearrange_radial,
)
from liouvillelab.sample_data import (
    annulus_boundary,
    bubble_field,
    circle_boundary,
    family_field,
    plateau_field,
    square_boundary,
)
from liouvillelab.solvers import Dirichlet2D, RadialIVP, profile_on_grid, solve_dirichlet, solve_radial

__all__ = ["Param", "Pipeline", "PipelineResult", "PIPELINES"]

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class Param:
    """
    A pipeline parameter: ``kind`` is one of ``"float"``, ``"int"``,
    ``"str"`` or ``"floats"`` (a list, a range or a single value).
    """

    kind: str
    default: Any
    help: str = ""


@dataclass
class PipelineResult:
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    fields: Dict[str, GridField] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def merge(self, prefix: str, other: PipelineResult) -> None:
        for name, table in other.tables.items():
            self.tables[f"{prefix}-{name}"] = table
        for name, ok in other.checks.items():
            self.checks[f"{prefix}:{name}"] = ok
        for name, f in other.fields.items():
            self.fields[f"{prefix}-{name}"] = f


@dataclass(frozen=True)
class Pipeline:
    name: str
    func: Callable[[Mapping[str, Any], int], PipelineResult]
    params: Dict[str, Param]
    description: str = ""

    def defaults(self) -> Dict[str, Any]:
        return {k: p.default for k, p in self.params.items()}

    def __call__(self, params: Mapping[str, Any], jobs: int = 1) -> PipelineResult:
        merged = self.defaults()
        merged.update(params)
        logger.info("pipeline %s started", self.name)
        result = self.func(merged, jobs)
        logger.info("pipeline %s finished: %d/%d checks passed", self.name, sum(result.checks.values()), len(result.checks))
        return result


def parallel_map(func: Callable[[T], R], items: Sequence[T], jobs: int) -> List[R]:
    """
    Map over ``items`` with up to ``jobs`` processes, keeping input order.
    """
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# ---------------------------------------------------------------------------
# Field sources

_FIELD_PARAMS = {
    "source": Param("str", "bubble", "bubble, family, solve or file"),
    "field": Param("str", "", "field file (.nc or text) when source=file"),
    "alpha": Param("float", 0.0),
    "a": Param("float", 1.0),
    "b": Param("float", 1.0),
    "M": Param("float", 3.0, "peak of the bubble"),
    "n_member": Param("float", 10.0, "member of the explicit family"),
    "grid": Param("int", 257, "grid samples per axis"),
    "extent": Param("float", 1.0),
}


def _potential(params: Mapping[str, Any]) -> PotentialSpec:
    if params["source"] == "family":
        return family_potential(params["a"], params["b"], params["n_member"])
    return ConstantPotential(params["b"])


def _solve_bubble_2d(alpha: float, b: float, M: float, extent: float, n: int) -> GridField:
    grid = bubble_field(alpha, b, M, extent=extent, n=n)
    problem = Dirichlet2D(grid, alpha=alpha, K=ConstantPotential(b))
    return solve_dirichlet(problem)


def field_from_params(params: Mapping[str, Any]) -> GridField:
    """
    The field named by the ``source`` parameter.
    """
    source = params["source"]
    if source == "bubble":
        return bubble_field(params["alpha"], params["b"], params["M"], extent=params["extent"], n=params["grid"])
    if source == "family":
        p = BubbleParams(params["alpha"], params["a"], params["b"], params["n_member"])
        return family_field(p, n=params["grid"])
    if source == "solve":
        return _solve_bubble_2d(params["alpha"], params["b"], params["M"], params["extent"], params["grid"])
    if source == "file":
        if not params["field"]:
            raise ValueError("source=file needs a field path")
        return load_field(Path(params["field"]))
    raise ValueError(f"Unknown field source {source!r}")


# ---------------------------------------------------------------------------
# family-sweep


def _family_row(args: Tuple[float, float, float, float]) -> Dict[str, float]:
    alpha, a, b, n = args
    p = BubbleParams(alpha, a, b, n)
    return {
        "n": n,
        "sup": family_u(p, 0.0),
        "inf": family_u(p, 1.0),
        "combination": supinf_combination(p),
        "bound": supinf_bound(alpha, a, b),
    }


def family_sweep(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Closed-form sup + inf combination of the explicit family over ``n``.
    """
    alpha, a, b = params["alpha"], params["a"], params["b"]
    rows = parallel_map(_family_row, [(alpha, a, b, float(n)) for n in params["n"]], jobs)
    df = pd.DataFrame(rows)
    comb = df["combination"].to_numpy()
    bound = float(df["bound"].iloc[0])
    checks = {
        "monotone": bool(np.all(np.diff(comb) >= -1e-12)),
        "bounded": bool(np.all(comb <= bound + 1e-12)),
    }
    if params["limit_tol"] > 0:
        checks["limit"] = bool(abs(comb[-1] - bound) <= params["limit_tol"])
    return PipelineResult(tables={"family": df}, checks=checks)


# ---------------------------------------------------------------------------
# solve-radial / solve-2d


def solve_radial_pipeline(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Radial solve with a constant or family potential; constant potentials
    are compared with the centered bubble.
    """
    alpha, b, M = params["alpha"], params["b"], params["M"]
    if params["a"] == b:
        K: PotentialSpec = ConstantPotential(b)
    else:
        K = family_potential(params["a"], b, params["n_member"])
    profile = solve_radial(RadialIVP(alpha, K, M, params["r_max"], tol=params["tol"]))
    df = pd.DataFrame({"r": profile.nodes, "u": profile.values})
    if profile.derivatives is not None:
        df["du"] = profile.derivatives
    checks = {}
    if isinstance(K, ConstantPotential):
        df["exact"] = centered_bubble(alpha, b, M, profile.nodes)
        err = float(np.max(np.abs(df["u"] - df["exact"])))
        logger.info("radial solve sup error %.3e", err)
        checks["bubble_match"] = bool(err <= params["match_tol"])
    return PipelineResult(tables={"profile": df}, checks=checks)


def solve_2d_pipeline(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Dirichlet solve with bubble boundary data, compared with the radial solve.
    """
    alpha, b, M, extent = params["alpha"], params["b"], params["M"], params["extent"]
    rows = []
    fields = {}
    for n in params["grids"]:
        n = int(n)
        solution = _solve_bubble_2d(alpha, b, M, extent, n)
        radial = solve_radial(RadialIVP(alpha, ConstantPotential(b), M, extent * math.sqrt(2.0) * 1.01))
        reference = profile_on_grid(radial, extent, n, domain=solution.domain)
        mask = solution.mask
        err = float(np.max(np.abs(solution.values[mask] - reference.values[mask])))
        rows.append({"grid": n, "h": solution.spacing, "max_error": err})
        fields[f"solution-{n}"] = solution
        logger.info("2D solve on %d^2 grid: max error against radial solve %.3e", n, err)
    df = pd.DataFrame(rows)
    errs = df["max_error"].to_numpy()
    checks = {"matches_radial": bool(errs[0] <= params["match_tol"])}
    if len(errs) > 1:
        checks["refines"] = bool(np.all(errs[1:] * params["refine_factor"] <= errs[:-1]))
    return PipelineResult(tables={"errors": df}, checks=checks, fields=fields)


# ---------------------------------------------------------------------------
# rearrange


def rearrange_pipeline(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Rearrange a field and audit K-hat bounds, the differential inequality
    and the isoperimetric ratio of every superlevel set.
    """
    u = field_from_params(params)
    K = _potential(params)
    weight = ConicalWeight(params["alpha"])
    clip = params["clip_radius"] if params["clip_radius"] > 0 else None
    profile = rearrange(u, weight, None, clip, K=K, n_levels=params["levels"])
    diff = audit_differential_inequality(profile)
    margin = audit_khat_bounds(profile, K.a, K.b)
    huber = audit_huber_levels(u, weight, profile.v_star, clip_radius=clip)
    df = profile.to_dataframe()
    df.insert(0, "xi", profile.xi)
    df.insert(0, "t", profile.v_star)
    hub = pd.DataFrame(
        {"t": [h.level for h in huber], "huber_ratio": [h.ratio for h in huber], "beta": [h.beta for h in huber]}
    ).drop_duplicates("t")
    df = df.merge(hub, on="t", how="left")
    checks = {
        "khat_bounds": margin <= params["khat_tol"],
        "differential_inequality": diff.passed,
        "huber": all(h.passed for h in huber),
    }
    logger.info("K-hat margin %.4g, %d inequality violations", margin, diff.violations.size)
    return PipelineResult(tables={"profile": df}, checks=checks)


# ---------------------------------------------------------------------------
# audit-huber


def audit_huber_pipeline(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Weighted isoperimetric ratio of a boundary file or a built-in shape.
    """
    center = (params["center_x"], params["center_y"])
    if params["boundary"]:
        boundary: Any = load_boundary(Path(params["boundary"]))
    elif params["shape"] == "circle":
        boundary = circle_boundary(center, params["radius"], params["segments"])
    elif params["shape"] == "square":
        boundary = square_boundary(params["radius"], center)
    elif params["shape"] == "annulus":
        boundary = annulus_boundary(0.5 * params["radius"], params["radius"], params["segments"])
    else:
        raise ValueError(f"Unknown shape {params['shape']!r}")
    audit = huber_check(boundary, params["h"], params["alpha"], center=(params["cone_x"], params["cone_y"]))
    df = pd.DataFrame(
        [
            {
                "length": audit.boundary_weighted_length,
                "mass": audit.interior_weighted_mass,
                "beta": audit.beta,
                "ratio": audit.ratio,
                "singular_inside": audit.singular_inside,
                "passed": audit.passed,
            }
        ]
    )
    return PipelineResult(tables={"huber": df}, checks={"huber": audit.passed})


# ---------------------------------------------------------------------------
# audit-suzuki


def audit_suzuki_pipeline(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Mean-value bound on random admissible balls, plus the centered ball.
    """
    w = field_from_params(params)
    alpha, b = params["alpha"], params["b"]
    lam = params["lam"] if params["lam"] > 0 else b
    extent = w.extent
    balls = [((0.0, 0.0), min(1.0, extent - 2.0 * w.spacing))]
    balls += _random_balls(w, params["n_balls"], np.random.default_rng(params["seed"]))
    df = _suzuki_table(w, ConicalWeight(alpha), lam, balls)
    checks = {"admissible_balls": _suzuki_admissible(w, df)}
    half_mass_M = math.log(8.0 * (1.0 + alpha) ** 2 / b)
    if params["source"] in ("bubble", "solve") and abs(params["M"] - half_mass_M) < 1e-12 and extent > 1.0:
        checks["bubble_equality"] = abs(float(df["margin"].iloc[0])) <= 1e-3
    return PipelineResult(tables={"suzuki": df}, checks=checks)


def _random_balls(w: GridField, n_balls: int, rng: np.random.Generator) -> List[Tuple[Point, float]]:
    """
    Balls with centers uniform in the disk of radius ``0.8 extent``, kept two
    cells away from the boundary.
    """
    extent, h = w.extent, w.spacing
    balls = []
    for _ in range(n_balls):
        dist = 0.8 * extent * math.sqrt(rng.uniform())
        angle = rng.uniform(0.0, 2.0 * math.pi)
        c = (dist * math.cos(angle), dist * math.sin(angle))
        room = extent - dist - 2.0 * h
        balls.append((c, rng.uniform(0.05 * room, room)))
    return balls


def _suzuki_admissible(w: GridField, df: pd.DataFrame) -> bool:
    osc = float(np.ptp(w.values[w.mask]))
    return bool(np.all(df["margin"] >= -1e-3 * osc))


def _suzuki_table(
    w: GridField,
    weight: ConicalWeight,
    lam: float,
    balls: Sequence[Tuple[Point, float]],
    *,
    check_residual: bool = True,
) -> pd.DataFrame:
    rows = []
    for c, radius in balls:
        audit = suzuki_check(w, weight, lam, c, radius, check_residual=check_residual)
        rows.append(
            {
                "center_x": c[0],
                "center_y": c[1],
                "radius": radius,
                "lhs": audit.lhs,
                "rhs": audit.rhs,
                "margin": audit.margin,
                "beta": audit.beta,
                "mass": audit.mass,
            }
        )
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# blowup


def _blowup_row(args: Tuple[Mapping[str, Any], float]) -> Dict[str, Any]:
    params, n = args
    p = BubbleParams(params["alpha"], params["a"], params["b"], n)
    K = family_potential(p.a, p.b, n)
    source: Any = family_profile(p) if params["source"] == "radial" else family_field(p, n=params["grid"])
    report, _ = analyze_blowup(
        source,
        p.alpha,
        params["rho"],
        K,
        case_threshold=params["case_threshold"],
        epsilon0=params["epsilon0"],
    )
    row = report.to_series().to_dict()
    row["n"] = n
    return row


def blowup_pipeline(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Blow-up reports for members of the explicit family.
    """
    rows = parallel_map(_blowup_row, [(dict(params), float(n)) for n in params["n"]], jobs)
    df = pd.DataFrame(rows)
    sigma_bar = params["b"] / params["a"]
    threshold = 4.0 * math.pi * (1.0 + 1.0 / math.sqrt(sigma_bar))
    checks = {"l_n_below_L_n": bool(np.all(df["l_n"] <= df["L_n"] * (1 + 1e-12)))}
    if params["neck_tol"] > 0:
        neck = df["neck_mass"].to_numpy()
        checks["neck_decreasing"] = bool(np.all(np.diff(neck) <= 1e-12))
        checks["neck_small"] = bool(neck[-1] < params["neck_tol"] * threshold)
    return PipelineResult(tables={"blowup": df}, checks=checks)


# ---------------------------------------------------------------------------
# supinf-sweep


def _supinf_row(args: Tuple[float, float, float, float, int, float]) -> Dict[str, float]:
    alpha, a, b, n, grid, radius = args
    p = BubbleParams(alpha, a, b, n)
    u = family_field(p, n=grid)
    A = Disk((0.0, 0.0), radius)
    report = supinf_eval(u, A, b / a)
    return {
        "n": n,
        "sup_A": report.sup_A,
        "inf_Omega": report.inf_Omega,
        "combination": report.combination,
        "normalized": report.normalized,
        "closed_form": supinf_combination(p),
        "product_form": report.product_form,
        "supxinf": supxinf_eval(u, A, b / a),
    }


def supinf_sweep(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    sup + inf of gridded family members, compared with the closed form.
    """
    args = [
        (params["alpha"], params["a"], params["b"], float(n), params["grid"], params["A_radius"]) for n in params["n"]
    ]
    df = pd.DataFrame(parallel_map(_supinf_row, args, jobs))
    df["difference"] = df["normalized"] - df["closed_form"]
    bound = supinf_bound(params["alpha"], params["a"], params["b"])
    checks = {
        "matches_closed_form": bool(np.all(np.abs(df["difference"]) <= params["match_tol"])),
        "bounded": bool(np.all(df["closed_form"] <= bound + 1e-12)),
    }
    return PipelineResult(tables={"supinf": df}, checks=checks)


# ---------------------------------------------------------------------------
# reproduction suite


def _total_curvature_check() -> PipelineResult:
    rows = []
    for alpha, a, b in [(0.0, 1.0, 1.0), (-0.5, 1.0, 4.0), (-0.25, 1.0, 2.0), (-0.75, 1.0, 1.0), (0.0, 1.0, 9.0), (-0.9, 2.0, 3.0)]:
        value = bubble_total_curvature(alpha, a, b)
        exact = 4.0 * math.pi * (1.0 + alpha) * (1.0 + math.sqrt(a / b))
        rows.append({"alpha": alpha, "a": a, "b": b, "value": value, "exact": exact, "rel_error": abs(value / exact - 1)})
    df = pd.DataFrame(rows)
    return PipelineResult(tables={"total-curvature": df}, checks={"total_curvature": bool(np.all(df["rel_error"] <= 1e-6))})


def _tail_profile(alpha: float, a: float, b: float) -> Tuple[RadialProfile, RadialPotential]:
    r = np.unique(np.concatenate([[0.0, 1.0], np.geomspace(1e-6, 1e8, 6000)]))
    profile = RadialProfile(r, limit_bubble(alpha, a, b, r), alpha=alpha, derivatives=limit_bubble_du(alpha, a, b, r) if alpha > -0.5 else None)
    return profile, RadialPotential([1.0], [b, a])


def _tail_check() -> PipelineResult:
    rows = []
    for alpha, a, b in [(-0.5, 1.0, 4.0), (0.0, 1.0, 1.0), (-0.25, 1.0, 2.0), (0.0, 1.0, 4.0)]:
        profile, K = _tail_profile(alpha, a, b)
        fit = integrated_bound_fit(rearrange_radial(profile, K), a, b)
        limit = 4.0 * math.pi * (1.0 + alpha) * (1.0 + math.sqrt(a / b))
        expected = 2.0 * (1.0 + alpha) * math.sqrt(a / b)
        rows.append(
            {
                "alpha": alpha,
                "a": a,
                "b": b,
                "exponent": fit.exponent,
                "expected_exponent": expected,
                "limit": fit.limit,
                "expected_limit": limit,
                "ok": abs(fit.exponent / expected - 1) <= 0.05 and abs(fit.limit / limit - 1) <= 0.01,
            }
        )
    df = pd.DataFrame(rows)
    return PipelineResult(tables={"tail": df}, checks={"tail_fit": bool(df["ok"].all())})


def _rearrangement_identity_check(grid: int) -> PipelineResult:
    rows = []
    rng = np.random.default_rng(0)
    ok_eq = True
    for alpha in (0.0, -0.25, -0.5):
        u = bubble_field(alpha, 1.0, 3.0, n=grid)
        weight = ConicalWeight(alpha)
        profile = rearrange(u, weight, n_levels=256)
        err = float(np.max(np.abs(profile.v_star - centered_bubble(alpha, 1.0, 3.0, profile.r_equiv))))
        levels = np.sort(rng.uniform(profile.v_star.min(), profile.v_star.max(), 32))
        xi = distribution_function(u, weight, levels).xi
        again = distribution_function(u, weight, levels[::-1]).xi
        ok_eq &= bool(np.all(np.abs(xi - again) <= 1e-6 * np.max(xi)))
        rows.append({"alpha": alpha, "max_error": err})
    df = pd.DataFrame(rows)
    checks = {"v_star_identity": bool(np.all(df["max_error"] <= 1e-3)), "equimeasurable": ok_eq}
    return PipelineResult(tables={"rearrangement": df}, checks=checks)


def _khat_check(grid: int) -> PipelineResult:
    p = BubbleParams(0.0, 1.0, 4.0, 2.0)
    u = family_field(p, n=grid)
    K = p.potential
    weight = ConicalWeight(0.0)
    margins = []
    for levels in (512, 1024):
        margins.append(audit_khat_bounds(rearrange(u, weight, n_levels=levels, K=K), p.a, p.b))
    df = pd.DataFrame({"levels": [512, 1024], "margin": margins})
    checks = {
        "khat_bounds": margins[0] <= defaults.khat_tol,
        "khat_refines": margins[1] <= max(0.5 * margins[0], 0.01),
    }
    return PipelineResult(tables={"khat": df}, checks=checks)


def _differential_check(grid: int) -> PipelineResult:
    rows = []
    for name, u, K in [
        ("bubble", bubble_field(0.0, 1.0, 3.0, n=grid), ConstantPotential(1.0)),
        ("family", family_field(BubbleParams(0.0, 1.0, 4.0, 2.0), n=grid), family_potential(1.0, 4.0, 2.0)),
    ]:
        report = audit_differential_inequality(rearrange(u, ConicalWeight(0.0), K=K))
        rows.append({"field": name, "violations": report.violations.size, "max_relative_gap": report.max_relative_gap})
    df = pd.DataFrame(rows)
    checks = {
        "no_violations": bool(np.all(df["violations"] == 0)),
        "bubble_saturates": bool(df["max_relative_gap"].iloc[0] <= 0.02),
    }
    return PipelineResult(tables={"differential": df}, checks=checks)


def _solver_fields(grid: int, cases: Sequence[Tuple[float, float]] = ((0.0, 3.0), (-0.5, 1.0))) -> Dict[str, GridField]:
    """
    Dirichlet and radial solver outputs on the unit disk, one pair per ``(alpha, M)``.
    """
    fields = {}
    for alpha, M in cases:
        fields[f"dirichlet({alpha})"] = _solve_bubble_2d(alpha, 1.0, M, 1.0, grid)
        # reaches the grid corners
        ivp = RadialIVP(alpha, ConstantPotential(1.0), M, math.sqrt(2.0) * 1.01)
        fields[f"radial({alpha})"] = profile_on_grid(solve_radial(ivp), 1.0, grid)
    return fields


def _huber_suite(solutions: Mapping[str, GridField]) -> PipelineResult:
    rows = []
    for alpha in (0.0, -0.5, -0.9):
        audit = huber_check(circle_boundary((0.0, 0.0), 1.0, 4096), 0.0, alpha)
        rows.append({"case": f"disk alpha={alpha}", "ratio": audit.ratio})
    annulus = huber_check(annulus_boundary(1.0, 2.0), 0.0, 0.0)
    rows.append({"case": "annulus", "ratio": annulus.ratio})
    level_rows = []
    for name, u in solutions.items():
        vals = u.values[u.mask]
        lo, osc = float(vals.min()), float(np.ptp(vals))
        audits = audit_huber_levels(u, ConicalWeight(u.alpha), np.linspace(lo, lo + 0.9 * osc, 33)[1:])
        level_rows.append(
            {
                "field": name,
                "levels": len(audits),
                "min_ratio": min((a.ratio for a in audits), default=math.nan),
                "passed": all(a.passed for a in audits),
            }
        )
    df = pd.DataFrame(rows)
    levels = pd.DataFrame(level_rows, columns=["field", "levels", "min_ratio", "passed"])
    checks = {
        "disk_equality": bool(np.all(np.abs(df["ratio"].iloc[:3] - 1.0) <= 1e-3)),
        "annulus_strict": annulus.ratio > 1.0,
        "solver_levels": bool(levels["passed"].all() and (levels["levels"] > 0).all()),
    }
    return PipelineResult(tables={"huber": df, "huber-levels": levels}, checks=checks)


def _suzuki_suite(solutions: Mapping[str, GridField], *, n_balls: int = 50, seed: int = 2) -> PipelineResult:
    """
    Mean-value bound on random admissible balls of every solver field.
    """
    rng = np.random.default_rng(seed)
    tables, checks = [], {}
    for name, u in solutions.items():
        balls = _random_balls(u, n_balls, rng)
        # sampled radial profiles only solve the equation up to stencil error
        df = _suzuki_table(u, ConicalWeight(u.alpha), 1.0, balls, check_residual=name.startswith("dirichlet"))
        checks[f"{name}:admissible_balls"] = _suzuki_admissible(u, df) and bool(np.isfinite(df["margin"]).all())
        tables.append(df.assign(field=name))
    return PipelineResult(tables={"suzuki": pd.concat(tables, ignore_index=True)}, checks=checks)


def _nullity_check(solutions: Mapping[str, GridField]) -> PipelineResult:
    rng = np.random.default_rng(1)
    rows = []
    for name, u in solutions.items():
        vals = u.values[u.mask]
        lo, osc = float(vals.min()), float(np.ptp(vals))
        eps = np.array([8.0, 4.0, 2.0, 1.0]) * u.spacing * osc
        for t in rng.uniform(lo + 0.1 * osc, lo + 0.7 * osc, 16):
            ratios = np.array([row[2] for row in level_measure_decay(u, float(t), eps)])
            rows.append({"field": name, "level": float(t), "spread": float(ratios.max() / ratios.min())})
    plateau = level_measure_decay(plateau_field(), 0.8, [0.08, 0.04, 0.02, 0.01])
    growth = plateau[-1][2] / plateau[0][2]
    df = pd.DataFrame(rows, columns=["field", "level", "spread"])
    return PipelineResult(
        tables={"nullity": df},
        checks={"bounded_ratio": bool(len(df) and df["spread"].max() <= 2.0), "plateau_diverges": growth > 2.0},
    )


def _blowup_bookkeeping(solution: GridField) -> PipelineResult:
    # an off-center peak, in case II
    alpha, b, M = -0.5, 1.0, 8.0
    x0 = (0.3, 0.0)
    u = bubble_field(alpha, b, M, n=257, center=x0)
    report = blowup_scales(u, Disk((0.0, 0.0), 0.5), alpha, 0.2)
    if report.tau is None:
        raise NumericalError(f"Expected a case II peak at {x0}, got case {report.case_tag}")
    dist = report.distance
    relation = abs(report.tau / dist - (report.delta / dist) ** (1.0 + alpha)) <= 1e-12 * max(1.0, report.tau / dist)

    K = ConstantPotential(b)
    M0 = float(solution.sample(0.0, 0.0))
    lam = 0.5 * math.exp(-M0 / (2.0 + 2.0 * solution.alpha))
    v = rescale(solution, (0.0, 0.0), lam, extent=1.05)
    w0 = ConicalWeight(solution.alpha)
    original = disk_weighted_integral(Disk((0.0, 0.0), lam), w0, lambda x, y: np.exp(solution.sample(x, y)))
    scaled = disk_weighted_integral(Disk((0.0, 0.0), 1.0), w0, lambda x, y: np.exp(v.sample(x, y)))
    jac = math.exp(M0) * lam ** (2.0 + 2.0 * solution.alpha)
    preserved = abs(jac * scaled / original - 1.0) <= 1e-3

    v1 = rescale(solution, (0.0, 0.0), 0.5)
    v2 = v1.with_values(v1.values + math.log(2.0))
    weight = ConicalWeight(solution.alpha)
    l1, _ = critical_radius(v1, weight, K, 1.0, 1.8, threshold=math.pi)
    l2, _ = critical_radius(v2, weight, K, 1.0, 1.8, threshold=math.pi)

    blow = blowup_pipeline(
        {
            "alpha": 0.0,
            "a": 1.0,
            "b": 1.0,
            "n": [10.0, 100.0, 1000.0, 10000.0],
            "rho": 0.5,
            "source": "radial",
            "grid": 129,
            "case_threshold": defaults.case_threshold,
            "epsilon0": defaults.epsilon0,
            "neck_tol": 0.05,
        },
        1,
    )
    checks = {
        "tau_relation": relation,
        "case_II": report.case_tag == "II",
        "rescale_mass": preserved,
        "critical_radius_monotone": l2 <= l1,
    }
    checks.update(blow.checks)
    return PipelineResult(tables=blow.tables, checks=checks)


def reproduce_all(params: Mapping[str, Any], jobs: int) -> PipelineResult:
    """
    Run every acceptance reproduction and collect their checks.
    """
    result = PipelineResult()
    for alpha, a, b, tol in [(0.0, 1.0, 1.0, 1e-3), (-0.5, 1.0, 4.0, 0.0), (-0.25, 1.0, 2.0, 0.0)]:
        sweep = PIPELINES["family-sweep"]({"alpha": alpha, "a": a, "b": b, "limit_tol": tol}, jobs)
        result.merge(f"family({alpha},{a},{b})", sweep)
    result.merge("curvature", _total_curvature_check())
    for alpha, M in [(0.0, 3.0), (-0.5, 3.0), (-0.75, 1.0)]:
        radial = PIPELINES["solve-radial"]({"alpha": alpha, "M": M, "r_max": 10.0}, jobs)
        result.merge(f"radial({alpha},{M})", radial)
    grids = [int(g) for g in params["grids"]]
    result.merge("solve-2d", PIPELINES["solve-2d"]({"grids": grids}, jobs))
    solution = result.fields[f"solve-2d-solution-{grids[0]}"]
    result.merge("rearrangement", _rearrangement_identity_check(params["grid"]))
    result.merge("khat", _khat_check(params["grid"]))
    result.merge("differential", _differential_check(params["grid"]))
    result.merge("tail", _tail_check())
    fields = _solver_fields(grids[0])
    result.merge("huber", _huber_suite(fields))
    half_mass_M = math.log(8.0)
    suzuki = PIPELINES["audit-suzuki"]({"source": "bubble", "M": half_mass_M, "extent": 2.0, "grid": params["grid"]}, jobs)
    result.merge("suzuki", suzuki)
    result.merge("suzuki-solvers", _suzuki_suite(fields))
    result.merge("nullity", _nullity_check(fields))
    result.merge("blowup", _blowup_bookkeeping(solution))
    result.merge(
        "supinf",
        PIPELINES["supinf-sweep"]({"alpha": -0.5, "a": 1.0, "b": 4.0, "n": [10.0, 100.0, 1000.0]}, jobs),
    )
    return result


_N_RANGE = Param("floats", [10.0, 100.0, 1e3, 1e4, 1e5, 1e6], "family members, e.g. n=10..1e6 steps=6")

PIPELINES: Dict[str, Pipeline] = {
    p.name: p
    for p in [
        Pipeline(
            "family-sweep",
            family_sweep,
            {
                "alpha": Param("float", 0.0),
                "a": Param("float", 1.0),
                "b": Param("float", 1.0),
                "n": _N_RANGE,
                "limit_tol": Param("float", 1e-3, "distance of the last combination to the bound; 0 skips"),
            },
            "closed-form sup + inf over the explicit family",
        ),
        Pipeline(
            "solve-radial",
            solve_radial_pipeline,
            {
                "alpha": Param("float", 0.0),
                "a": Param("float", 1.0),
                "b": Param("float", 1.0),
                "n_member": Param("float", 10.0),
                "M": Param("float", 3.0),
                "r_max": Param("float", 10.0),
                "tol": Param("float", 1e-10),
                "match_tol": Param("float", 1e-6),
            },
            "radial shooting solve",
        ),
        Pipeline(
            "solve-2d",
            solve_2d_pipeline,
            {
                "alpha": Param("float", 0.0),
                "b": Param("float", 1.0),
                "M": Param("float", 3.0),
                "extent": Param("float", 1.0),
                "grids": Param("floats", [257.0, 513.0], "grid sizes, coarse to fine"),
                "match_tol": Param("float", 1e-2),
                "refine_factor": Param("float", 3.0),
            },
            "Dirichlet solve against the radial solution",
        ),
        Pipeline(
            "rearrange",
            rearrange_pipeline,
            dict(
                _FIELD_PARAMS,
                levels=Param("int", 512),
                clip_radius=Param("float", 0.0, "0 disables clipping"),
                khat_tol=Param("float", defaults.khat_tol),
            ),
            "weighted rearrangement and its audits",
        ),
        Pipeline(
            "audit-huber",
            audit_huber_pipeline,
            {
                "boundary": Param("str", "", "boundary file; overrides shape"),
                "shape": Param("str", "circle", "circle, square or annulus"),
                "radius": Param("float", 1.0),
                "center_x": Param("float", 0.0),
                "center_y": Param("float", 0.0),
                "segments": Param("int", 4096),
                "alpha": Param("float", 0.0),
                "h": Param("float", 0.0, "constant subharmonic function"),
                "cone_x": Param("float", 0.0),
                "cone_y": Param("float", 0.0),
            },
            "weighted isoperimetric inequality",
        ),
        Pipeline(
            "audit-suzuki",
            audit_suzuki_pipeline,
            dict(
                _FIELD_PARAMS,
                lam=Param("float", 0.0, "0 uses b"),
                n_balls=Param("int", 50),
                seed=Param("int", 0),
            ),
            "mean-value bound on random balls",
        ),
        Pipeline(
            "blowup",
            blowup_pipeline,
            {
                "alpha": Param("float", 0.0),
                "a": Param("float", 1.0),
                "b": Param("float", 1.0),
                "n": Param("floats", [10.0, 100.0, 1e3, 1e4]),
                "rho": Param("float", 0.5),
                "source": Param("str", "radial", "radial or grid"),
                "grid": Param("int", 257),
                "case_threshold": Param("float", defaults.case_threshold),
                "epsilon0": Param("float", defaults.epsilon0),
                "neck_tol": Param("float", 0.05, "neck mass limit as a fraction of the threshold; 0 skips"),
            },
            "blow-up reports for the explicit family",
        ),
        Pipeline(
            "supinf-sweep",
            supinf_sweep,
            {
                "alpha": Param("float", 0.0),
                "a": Param("float", 1.0),
                "b": Param("float", 1.0),
                "n": _N_RANGE,
                "grid": Param("int", 129),
                "A_radius": Param("float", 0.5),
                "match_tol": Param("float", 1e-3),
            },
            "sup + inf of gridded family members",
        ),
        Pipeline(
            "reproduce-all",
            reproduce_all,
            {
                "grid": Param("int", 401),
                "grids": Param("floats", [257.0, 513.0]),
            },
            "every acceptance reproduction",
        ),
    ]
}
