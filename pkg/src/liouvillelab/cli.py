"""
Command-line front end.

Usage::

    liouvillelab COMMAND [key=value ...] [--key=value ...] [--config PATH] [--jobs N] [--out DIR] [-v]

Parameters come from an optional flat ``key=value`` file, then from
``key=value`` tokens and ``--key=value`` flags, later sources winning.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from liouvillelab.exceptions import NumericalError, UsageError
from liouvillelab.io import save_field, write_table
from liouvillelab.pipelines import PIPELINES, Param

__all__ = ["RunConfig", "RunManifest", "parse_config", "run", "main"]

logger = logging.getLogger(__name__)

OUT_ENV = "LIOUVILLE_LAB_OUT"
DEFAULT_OUT = Path("liouvillelab-out")
DEFAULT_STEPS = 6

EXIT_PASS = 0
EXIT_AUDIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _version() -> str:
    try:
        from importlib.metadata import PackageNotFoundError, version
    except ImportError:  # pragma: no cover
        return "unknown"
    try:
        return version("liouvillelab")
    except PackageNotFoundError:
        return "unknown"


@dataclass(frozen=True)
class RunConfig:
    """
    A validated run: the command, its complete parameter set, the output
    directory and the number of worker processes.
    """

    command: str
    parameters: Dict[str, Any]
    out_dir: Path = DEFAULT_OUT
    jobs: int = 1


@dataclass
class RunManifest:
    """
    Record of a finished run, written as ``manifest.json``.
    """

    command: str
    parameters: Dict[str, Any]
    version: str
    wall_time: float
    checks: Dict[str, bool] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    exit_status: int = EXIT_PASS
    error: Optional[str] = None

    def write(self, path: Path) -> None:
        """
        Write the manifest atomically: a temporary file in the same directory
        is renamed over ``path``.
        """
        path = Path(path)
        text = json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise


def _read_config_file(path: Path) -> Dict[str, str]:
    if not path.is_file():
        raise UsageError(f"Config file {path} does not exist")
    pairs = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        pairs[key.strip()] = value.strip()
    return pairs


def _split_tokens(tokens: Sequence[str]) -> tuple[Optional[str], Dict[str, str]]:
    command = None
    pairs = {}
    for token in tokens:
        body = token[2:] if token.startswith("--") else token
        key, sep, value = body.partition("=")
        if sep:
            pairs[key.strip().replace("-", "_")] = value.strip()
        elif token.startswith("-"):
            raise UsageError(f"Flags must be written --key=value, got {token!r}")
        elif command is None:
            command = token
        else:
            raise UsageError(f"Unexpected argument {token!r}")
    return command, pairs


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"Cannot parse {key}={text!r} as a number") from None


def _parse_value(key: str, param: Param, text: str, steps: int) -> Any:
    if param.kind == "str":
        return text
    if param.kind == "float":
        return _parse_float(key, text)
    if param.kind == "int":
        value = _parse_float(key, text)
        if not value.is_integer():
            raise UsageError(f"{key}={text!r} must be an integer")
        return int(value)
    if param.kind == "floats":
        if ".." in text:
            lo_text, hi_text = text.split("..", 1)
            lo, hi = _parse_float(key, lo_text), _parse_float(key, hi_text)
            if lo > 0 and hi > 0:
                return [float(v) for v in np.geomspace(lo, hi, steps)]
            return [float(v) for v in np.linspace(lo, hi, steps)]
        return [_parse_float(key, v) for v in text.split(",") if v.strip()]
    raise UsageError(f"Unknown parameter kind {param.kind!r} for {key}")


def parse_config(
    path: Optional[Path] = None,
    tokens: Sequence[str] = (),
    *,
    out_dir: Optional[Path] = None,
    jobs: int = 1,
) -> RunConfig:
    """
    Build a `RunConfig` from a config file and command-line tokens.

    Parameters
    ----------
    path : os.PathLike, optional
        Flat ``key=value`` file; ``#`` starts a comment.
    tokens : sequence of str
        Command name, ``key=value`` tokens and ``--key=value`` flags.
        These override the file.
    out_dir : os.PathLike, optional
        Output directory; defaults to ``$LIOUVILLE_LAB_OUT``, then
        ``./liouvillelab-out``.
    jobs : int
        Worker processes for sweeps.

    Raises
    ------
    UsageError
        For a missing or unknown command, an unknown key or an unparseable
        value.
    """
    raw: Dict[str, str] = {} if path is None else _read_config_file(Path(path))
    command, overrides = _split_tokens(tokens)
    raw.update(overrides)
    file_command = raw.pop("command", None)
    command = command or file_command
    if command is None:
        raise UsageError(f"A command is required; one of {', '.join(PIPELINES)}")
    if command not in PIPELINES:
        raise UsageError(f"Unknown command {command!r}; one of {', '.join(PIPELINES)}")
    if jobs < 1:
        raise UsageError(f"jobs must be at least 1, got {jobs}")
    pipeline = PIPELINES[command]

    steps = DEFAULT_STEPS
    if "steps" in raw:
        steps = int(_parse_float("steps", raw.pop("steps")))
        if steps < 1:
            raise UsageError(f"steps must be at least 1, got {steps}")
    parameters = pipeline.defaults()
    for key, text in raw.items():
        if key not in pipeline.params:
            raise UsageError(f"Unknown key {key!r} for {command}; known keys: {', '.join(pipeline.params)}")
        parameters[key] = _parse_value(key, pipeline.params[key], text, steps)
        if isinstance(parameters[key], float) and not math.isfinite(parameters[key]):
            raise UsageError(f"{key} must be finite, got {text!r}")

    if out_dir is None:
        out_dir = Path(os.environ.get(OUT_ENV, DEFAULT_OUT))
    return RunConfig(command, parameters, Path(out_dir), jobs)


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run(config: RunConfig) -> int:
    """
    Run a pipeline, write its CSV tables, fields and manifest.

    Returns
    -------
    int
        0 if every check passed, 1 on an audit failure, 2 for invalid input
        and 3 for a numerical or any other failure.
    """
    start = time.perf_counter()
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config.command, config.parameters, _version(), 0.0)
    try:
        result = PIPELINES[config.command](config.parameters, config.jobs)
    except NumericalError as exc:
        logger.error("%s failed: %s: %s", config.command, type(exc).__name__, exc)
        manifest.exit_status, manifest.error = EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        logger.error("%s rejected its input: %s: %s", config.command, type(exc).__name__, exc)
        manifest.exit_status, manifest.error = EXIT_USAGE, f"{type(exc).__name__}: {exc}"
    except Exception as exc:
        logger.exception("%s failed unexpectedly", config.command)
        manifest.exit_status, manifest.error = EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
    else:
        for name, table in result.tables.items():
            path = out / f"{name}.csv"
            write_table(table, path)
            manifest.outputs[path.name] = _digest(path)
        for name, f in result.fields.items():
            path = out / f"{name}.nc"
            save_field(f, path)
            manifest.outputs[path.name] = _digest(path)
        manifest.checks = {name: bool(ok) for name, ok in result.checks.items()}
        for name, ok in result.checks.items():
            if not ok:
                logger.warning("check %s failed", name)
        manifest.exit_status = EXIT_PASS if result.passed else EXIT_AUDIT_FAILURE
    manifest.wall_time = time.perf_counter() - start
    manifest.write(out / "manifest.json")
    logger.info("%s finished in %.1f s with exit status %d", config.command, manifest.wall_time, manifest.exit_status)
    if manifest.error is not None:
        print(f"error: {manifest.error}", file=sys.stderr)
    for name, ok in manifest.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return manifest.exit_status


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouvillelab",
        description="Numerical checks for the singular Liouville equation.",
        epilog="Commands: " + ", ".join(f"{name} ({p.description})" for name, p in PIPELINES.items()),
    )
    parser.add_argument("tokens", nargs="*", help="command followed by key=value parameters")
    parser.add_argument("--config", type=Path, default=None, help="flat key=value file")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args, extra = _parser().parse_known_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    try:
        config = parse_config(args.config, [*args.tokens, *extra], out_dir=args.out, jobs=args.jobs)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
