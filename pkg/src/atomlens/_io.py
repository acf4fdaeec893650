"""CSV tables and run manifests."""

from __future__ import annotations

import json
import platform
from pathlib import Path

import numpy as np
import scipy

FLOAT_FMT = "%.17g"


def _fmt(v) -> str:
    if v is None:
        return "nan"
    return FLOAT_FMT % float(v)


def write_table(path, header, columns) -> Path:
    """Write equal-length columns as CSV with a header row, 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trace(path, trace) -> Path:
    return write_table(path, ("t", "L"), (trace.times, trace.values))


def write_density(path, profile) -> Path:
    return write_table(path, ("x_over_lambda", "P"), (profile.x, profile.P))


def write_scan(path, scan) -> Path:
    rows = scan.rows
    cols = ([r.r for r in rows], [r.t_m for r in rows], [r.L_min for r in rows], [r.stderr for r in rows])
    return write_table(path, ("r", "t_m", "L_min", "stderr"), cols)


def read_table(path):
    """Inverse of write_table: (header, 2-D array)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def versions() -> dict:
    from . import __version__

    return {
        "atomlens": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_manifest(path, config: dict, outputs, wall_time: float, extra=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "config": config,
        "base_seed": config.get("base_seed"),
        "versions": versions(),
        "wall_time_s": wall_time,
        "outputs": [Path(o).name for o in outputs],
    }
    if extra:
        doc["results"] = extra
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path
