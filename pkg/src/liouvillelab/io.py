"""
Reading and writing fields, boundaries, profiles and tables.
"""
import io
import logging
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from liouvillelab.core import GridField, RadialProfile

__all__ = [
    "load_field",
    "save_field",
    "load_boundary",
    "save_boundary",
    "load_profile",
    "save_profile",
    "write_table",
]

logger = logging.getLogger(__name__)

_HEADER_KEYS = ("extent", "n", "alpha", "mask")

# mask flag values; "domain" is accepted in place of "mask" on read
_MASK_FLAGS = {"disk": "disk", "square": "square", "1": "disk", "true": "disk", "0": "square", "false": "square"}


def load_field(path: Path) -> GridField:
    """
    Load a field from a netCDF (``.nc``) or plain text file.

    The text format starts with four ``key=value`` lines, ``extent``, ``n``,
    ``alpha`` and the ``mask`` flag, followed by ``n`` rows of ``n`` values;
    row ``i`` holds the samples at ``y = -extent + i h``. The flag ``disk``
    (or ``1``) masks the nodes outside the inscribed disk and ``square`` (or
    ``0``) keeps every node. Undefined ghost nodes are written as ``nan``.

    Parameters
    ----------
    path : os.PathLike
        File to read.

    Returns
    -------
    GridField
    """
    path = Path(path)
    if path.suffix == ".nc":
        return GridField.load(path)
    lines = path.read_text().splitlines()
    header = {}
    for line in lines[: len(_HEADER_KEYS)]:
        key, _, value = line.partition("=")
        key = key.strip()
        header["mask" if key == "domain" else key] = value.strip()
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ValueError(f"{path} is missing header keys {missing}")
    values = np.loadtxt(io.StringIO("\n".join(lines[len(_HEADER_KEYS) :])), ndmin=2)
    n = int(header["n"])
    if values.shape != (n, n):
        raise ValueError(f"{path} holds a {values.shape} array, expected ({n}, {n})")
    flag = header["mask"].lower()
    if flag not in _MASK_FLAGS:
        raise ValueError(f"{path} has an unknown mask flag {header['mask']!r}")
    return GridField(values, float(header["extent"]), domain=_MASK_FLAGS[flag], alpha=float(header["alpha"]))


def save_field(field: GridField, path: Path) -> None:
    """
    Save a field; the format follows the suffix (``.nc`` or text).
    """
    path = Path(path)
    if path.suffix == ".nc":
        field.save(path)
        return
    header = "\n".join(
        [f"extent={float(field.extent)!r}", f"n={field.n}", f"alpha={float(field.alpha)!r}", f"mask={field.domain}"]
    )
    np.savetxt(path, field.values, fmt="%.17g", header=header, comments="")
    logger.debug("wrote %r to %s", field, path)


def load_boundary(path: Path) -> List[np.ndarray]:
    """
    Load closed boundary rings.

    The file holds one ``x y`` pair per line; rings are separated by blank
    lines and lines starting with ``#`` are ignored.
    """
    rings: List[np.ndarray] = []
    block: List[str] = []
    for line in Path(path).read_text().splitlines() + [""]:
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if stripped:
            block.append(stripped)
        elif block:
            rings.append(np.loadtxt(io.StringIO("\n".join(block)), ndmin=2))
            block = []
    if not rings:
        raise ValueError(f"No boundary vertices in {path}")
    for ring in rings:
        if ring.shape[1] != 2:
            raise ValueError(f"Boundary vertices in {path} must have two columns")
    return rings


def save_boundary(rings: List[np.ndarray], path: Path) -> None:
    text = "\n\n".join("\n".join(f"{x!r} {y!r}" for x, y in np.asarray(r, dtype=float).tolist()) for r in rings)
    Path(path).write_text(text + "\n")


def load_profile(path: Path, alpha: float = 0.0) -> RadialProfile:
    """
    Load a radial profile from a CSV table with columns ``r``, ``u`` and,
    optionally, ``du``.
    """
    df = pd.read_csv(path)
    derivs = df["du"].to_numpy() if "du" in df.columns else None
    return RadialProfile(df["r"].to_numpy(), df["u"].to_numpy(), alpha=alpha, derivatives=derivs)


def save_profile(profile: RadialProfile, path: Path) -> None:
    df = pd.DataFrame({"r": profile.nodes, "u": profile.values})
    if profile.derivatives is not None:
        df["du"] = profile.derivatives
    write_table(df, path)


def write_table(df: pd.DataFrame, path: Path) -> None:
    """
    Write a table as CSV with round-trip float precision.
    """
    df.to_csv(path, index=False, float_format="%.17g")
