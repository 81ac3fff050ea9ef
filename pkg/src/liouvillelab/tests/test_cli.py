import hashlib
import json
import math

import pytest

from liouvillelab.cli import OUT_ENV, RunConfig, main, parse_config, run
from liouvillelab.exceptions import UsageError
from liouvillelab.io import save_boundary
from liouvillelab.pipelines import PIPELINES
from liouvillelab.sample_data import figure_eight_boundary


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# family sweep\ncommand=family-sweep\nalpha=0\nb = 4  # trailing comment\n")
    return path


class TestParseConfig:
    def test_file(self, config_file) -> None:
        config = parse_config(config_file)
        assert config.command == "family-sweep"
        assert config.parameters["alpha"] == 0.0
        assert config.parameters["b"] == 4.0
        assert config.parameters["a"] == 1.0

    def test_flags_override_file(self, config_file) -> None:
        config = parse_config(config_file, ["--alpha=-0.5", "b=2"])
        assert config.parameters["alpha"] == -0.5
        assert config.parameters["b"] == 2.0

    def test_dashes_in_keys(self) -> None:
        config = parse_config(None, ["family-sweep", "--limit-tol=0"])
        assert config.parameters["limit_tol"] == 0.0

    def test_range(self) -> None:
        config = parse_config(None, ["family-sweep", "n=10..1e6", "steps=6"])
        assert config.parameters["n"] == pytest.approx([10.0, 100.0, 1e3, 1e4, 1e5, 1e6])

    def test_linear_range(self) -> None:
        config = parse_config(None, ["supinf-sweep", "alpha=-0.5", "n=0..1", "steps=3"])
        assert config.parameters["n"] == pytest.approx([0.0, 0.5, 1.0])

    def test_list(self) -> None:
        config = parse_config(None, ["family-sweep", "n=10,20,40"])
        assert config.parameters["n"] == [10.0, 20.0, 40.0]

    def test_int(self) -> None:
        assert parse_config(None, ["rearrange", "grid=129"]).parameters["grid"] == 129
        with pytest.raises(UsageError, match="integer"):
            parse_config(None, ["rearrange", "grid=2.5"])

    @pytest.mark.parametrize(
        "tokens, match",
        [
            (["alpha=0"], "command is required"),
            (["no-such-command"], "Unknown command"),
            (["family-sweep", "foo=1"], "Unknown key"),
            (["family-sweep", "alpha=abc"], "Cannot parse"),
            (["family-sweep", "alpha=inf"], "finite"),
            (["family-sweep", "-x"], "--key=value"),
            (["family-sweep", "extra"], "Unexpected argument"),
        ],
    )
    def test_usage_errors(self, tokens: list, match: str) -> None:
        with pytest.raises(UsageError, match=match):
            parse_config(None, tokens)

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(UsageError, match="does not exist"):
            parse_config(tmp_path / "missing.cfg", ["family-sweep"])

    def test_bad_line(self, tmp_path) -> None:
        path = tmp_path / "bad.cfg"
        path.write_text("family-sweep\n")
        with pytest.raises(UsageError, match="expected key=value"):
            parse_config(path)

    def test_output_directory(self, tmp_path, monkeypatch) -> None:
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert parse_config(None, ["family-sweep"]).out_dir == tmp_path / "env"
        assert parse_config(None, ["family-sweep"], out_dir=tmp_path / "flag").out_dir == tmp_path / "flag"
        monkeypatch.delenv(OUT_ENV)
        assert str(parse_config(None, ["family-sweep"]).out_dir) == "liouvillelab-out"

    def test_jobs(self) -> None:
        with pytest.raises(UsageError, match="jobs"):
            parse_config(None, ["family-sweep"], jobs=0)


class TestRun:
    def test_family_sweep(self, tmp_path, capsys) -> None:
        config = parse_config(None, ["family-sweep", "n=10..1e6"], out_dir=tmp_path)
        assert run(config) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "family-sweep"
        assert manifest["exit_status"] == 0
        assert manifest["error"] is None
        assert manifest["checks"] == {"monotone": True, "bounded": True, "limit": True}
        digest = hashlib.sha256((tmp_path / "family.csv").read_bytes()).hexdigest()
        assert manifest["outputs"] == {"family.csv": digest}
        assert manifest["parameters"]["n"] == pytest.approx([10.0, 100.0, 1e3, 1e4, 1e5, 1e6])
        assert "PASS limit" in capsys.readouterr().out

    def test_audit_failure(self, tmp_path, capsys) -> None:
        config = RunConfig("family-sweep", {"n": [10.0]}, tmp_path)
        assert run(config) == 1
        assert "FAIL limit" in capsys.readouterr().out
        assert json.loads((tmp_path / "manifest.json").read_text())["checks"]["limit"] is False

    def test_numerical_failure(self, tmp_path, capsys) -> None:
        config = parse_config(None, ["solve-radial", "M=800"], out_dir=tmp_path)
        assert run(config) == 3
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["error"].startswith("BlowupOverflowError")
        assert manifest["outputs"] == {}
        assert "error: BlowupOverflowError" in capsys.readouterr().err

    def test_unexpected_failure(self, tmp_path, capsys, monkeypatch) -> None:
        def broken(params, jobs):
            raise TypeError("unsupported operand")

        config = parse_config(None, ["family-sweep"], out_dir=tmp_path)
        monkeypatch.setitem(PIPELINES, "family-sweep", broken)
        assert run(config) == 3
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["exit_status"] == 3
        assert manifest["error"] == "TypeError: unsupported operand"
        assert "error: TypeError" in capsys.readouterr().err

    def test_self_intersecting_boundary(self, tmp_path, capsys) -> None:
        path = tmp_path / "eight.txt"
        save_boundary([figure_eight_boundary()], path)
        status = main(["audit-huber", f"boundary={path}", "--out", str(tmp_path / "out")])
        assert status == 2
        assert "InvalidDomainError" in capsys.readouterr().err
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["exit_status"] == 2

    def test_huber_circle(self, tmp_path) -> None:
        status = main(["audit-huber", "--alpha=-0.5", "--out", str(tmp_path)])
        assert status == 0
        assert (tmp_path / "huber.csv").is_file()


def test_main_usage_error(capsys) -> None:
    assert main(["no-such-command"]) == 2
    assert "usage error" in capsys.readouterr().err


def test_steps_must_be_positive() -> None:
    with pytest.raises(UsageError, match="steps"):
        parse_config(None, ["family-sweep", "n=1..2", "steps=0"])
    assert math.isfinite(parse_config(None, ["family-sweep", "n=1..2", "steps=1"]).parameters["n"][0])
