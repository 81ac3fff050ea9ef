import math
from typing import Any, Dict, Mapping

import numpy as np
import pandas as pd
import pytest

from liouvillelab import pipelines
from liouvillelab.core import GridField
from liouvillelab.pipelines import PIPELINES, Pipeline, PipelineResult, parallel_map


@pytest.fixture(scope="module")
def solver_fields() -> Dict[str, GridField]:
    return pipelines._solver_fields(129, [(-0.5, 1.0)])


def test_commands() -> None:
    assert set(PIPELINES) == {
        "family-sweep",
        "solve-radial",
        "solve-2d",
        "rearrange",
        "audit-huber",
        "audit-suzuki",
        "blowup",
        "supinf-sweep",
        "reproduce-all",
    }
    for pipeline in PIPELINES.values():
        assert pipeline.description


def test_merge() -> None:
    result = PipelineResult(checks={"a": True})
    result.merge("sub", PipelineResult(tables={"t": pd.DataFrame({"x": [1]})}, checks={"b": False}))
    assert set(result.tables) == {"sub-t"}
    assert result.checks == {"a": True, "sub:b": False}
    assert not result.passed


def test_parallel_map_keeps_order() -> None:
    assert parallel_map(math.sqrt, [4.0, 9.0, 16.0], jobs=1) == [2.0, 3.0, 4.0]


def test_family_sweep() -> None:
    result = PIPELINES["family-sweep"]({"alpha": -0.5, "a": 1.0, "b": 4.0, "limit_tol": 0.0})
    df = result.tables["family"]
    assert list(df.columns) == ["n", "sup", "inf", "combination", "bound"]
    assert result.checks == {"monotone": True, "bounded": True}
    assert df["bound"].iloc[0] == pytest.approx(1.5 * math.log(0.5))


def test_solve_radial_matches_bubble() -> None:
    result = PIPELINES["solve-radial"]({"alpha": -0.5, "M": 2.0, "r_max": 5.0})
    assert result.passed
    assert {"r", "u", "exact"} <= set(result.tables["profile"].columns)


def test_audit_huber_shapes() -> None:
    for shape in ["circle", "square", "annulus"]:
        assert PIPELINES["audit-huber"]({"shape": shape, "segments": 512}).passed
    with pytest.raises(ValueError, match="Unknown shape"):
        PIPELINES["audit-huber"]({"shape": "triangle"})


class TestSolverSuites:
    def test_fields(self, solver_fields: Dict[str, GridField]) -> None:
        assert set(solver_fields) == {"dirichlet(-0.5)", "radial(-0.5)"}
        for u in solver_fields.values():
            assert u.alpha == -0.5
            assert np.all(np.isfinite(u.values[u.mask]))
        assert solver_fields["radial(-0.5)"].sample(0.0, 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_huber(self, solver_fields: Dict[str, GridField]) -> None:
        result = pipelines._huber_suite(solver_fields)
        assert result.passed
        levels = result.tables["huber-levels"]
        assert list(levels["field"]) == ["dirichlet(-0.5)", "radial(-0.5)"]
        assert (levels["levels"] > 0).all()
        assert (levels["min_ratio"] >= 0.98).all()

    def test_suzuki(self, solver_fields: Dict[str, GridField]) -> None:
        radial = {"radial(-0.5)": solver_fields["radial(-0.5)"]}
        result = pipelines._suzuki_suite(radial, n_balls=10)
        assert result.checks == {"radial(-0.5):admissible_balls": True}
        df = result.tables["suzuki"]
        assert len(df) == 10
        assert set(df["field"]) == {"radial(-0.5)"}
        assert np.all(np.isfinite(df["margin"]))

    def test_nullity(self, solver_fields: Dict[str, GridField]) -> None:
        result = pipelines._nullity_check(solver_fields)
        assert result.checks == {"bounded_ratio": True, "plateau_diverges": True}
        assert len(result.tables["nullity"]) == 32

    def test_reproduce_all_audits_solver_fields(
        self, solver_fields: Dict[str, GridField], monkeypatch: pytest.MonkeyPatch
    ) -> None:
        radial = {"radial(-0.5)": solver_fields["radial(-0.5)"]}

        def stub(params: Mapping[str, Any], jobs: int) -> PipelineResult:
            grids = params.get("grids", [])
            return PipelineResult(fields={f"solution-{int(g)}": solver_fields["dirichlet(-0.5)"] for g in grids})

        for name in ["family-sweep", "solve-radial", "solve-2d", "audit-suzuki", "supinf-sweep"]:
            monkeypatch.setitem(PIPELINES, name, Pipeline(name, stub, {}))
        for helper in [
            "_total_curvature_check",
            "_tail_check",
            "_rearrangement_identity_check",
            "_khat_check",
            "_differential_check",
            "_blowup_bookkeeping",
        ]:
            monkeypatch.setattr(pipelines, helper, lambda *args: PipelineResult())
        monkeypatch.setattr(pipelines, "_solver_fields", lambda grid: radial)

        result = pipelines.reproduce_all({"grid": 129, "grids": [129.0]}, 1)
        assert result.checks == {
            "huber:disk_equality": True,
            "huber:annulus_strict": True,
            "huber:solver_levels": True,
            "suzuki-solvers:radial(-0.5):admissible_balls": True,
            "nullity:bounded_ratio": True,
            "nullity:plateau_diverges": True,
        }
        assert list(result.tables["huber-huber-levels"]["field"]) == ["radial(-0.5)"]
        assert len(result.tables["suzuki-solvers-suzuki"]) == 50
