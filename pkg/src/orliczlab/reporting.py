"""Run reports: JSON with 17 significant digits and flat CSV tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "orliczlab"


def _float_text(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    # keep floats recognizable as floats after reparsing
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def plain(obj):
    """Convert numpy scalars/arrays, tuples and dataclass-like reports to JSON types."""
    if hasattr(obj, "to_dict") and not isinstance(obj, dict):
        return plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float printed to 17 significant digits.

    Non-finite floats use the ``NaN``/``Infinity`` tokens that
    :func:`json.loads` accepts.  Keys keep their insertion order.
    """
    import json

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return _float_text(o)
        return json.dumps(o)

    return enc(plain(obj), 0)


@dataclass
class RunReport:
    """Everything a subcommand produces: the config echo, results and verdict."""

    command: str
    config: dict
    results: dict = field(default_factory=dict)
    passed: bool | None = None
    error: dict | None = None
    wall_clock_s: float | None = None

    def to_dict(self) -> dict:
        out = {"tool": TOOL, "version": __version__, "command": self.command,
               "config": self.config, "results": self.results, "passed": self.passed}
        if self.error is not None:
            out["error"] = self.error
        if self.wall_clock_s is not None:
            out["wall_clock_s"] = self.wall_clock_s
        return out


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_float_text(float(v)) if isinstance(v, (float, np.floating))
                        else v for v in row])
    return path
