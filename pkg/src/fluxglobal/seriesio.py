"""CSV series and JSON report serialization.

CSV files carry a header row ``x,<component names...>``, one row per interior
node, 17 significant digits (value-preserving for doubles), LF line endings.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np


def write_series(path, x, columns: dict) -> Path:
    """Write aligned series to CSV; ``columns`` maps names to 1-D arrays."""
    path = Path(path)
    x = np.asarray(x, dtype=float)
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    for name, arr in zip(names, arrays):
        if arr.shape != x.shape:
            raise ValueError(f"column {name!r} has shape {arr.shape}, x has {x.shape}")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(["x"] + names) + "\n")
        for i in range(x.size):
            row = [format(x[i], ".17g")] + [format(a[i], ".17g") for a in arrays]
            fh.write(",".join(row) + "\n")
    return path


def read_series(path):
    """Read a CSV written by :func:`write_series` -> (x, {name: array})."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[0] != "x":
        raise ValueError(f"{path} is not a series file (header starts with {header[0]!r})")
    x = data[:, 0]
    return x, {name: data[:, k + 1] for k, name in enumerate(header[1:])}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report(report: dict, path) -> Path:
    """Serialize an error/rate report (tolerances, pass flags) as JSON."""
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_manifest(config_echo: dict, out_dir) -> Path:
    """Record the resolved configuration and versions next to the outputs."""
    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": _jsonable(config_echo),
        "versions": {
            "fluxglobal": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    path = out_dir / "manifest.json"
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
