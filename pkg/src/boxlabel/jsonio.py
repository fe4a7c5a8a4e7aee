"""Deterministic JSON writing for project artifacts.

Floats are written with 9 significant digits, enough for sub-micrometer
poses and sub-millipixel boxes while keeping files diffable. The writer is
idempotent: load followed by save reproduces the file byte for byte, because
every 9-digit decimal survives a float64 round trip unchanged.
"""

from __future__ import annotations

import json
import math
from pathlib import Path


def format_number(x: float) -> str:
    if isinstance(x, bool):  # bool is an int subclass; keep it out of here
        raise TypeError("bool is not a number here")
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    if x == 0.0:
        return "0"  # normalize -0.0 so reload+save is stable
    return format(x, ".9g")


def _is_scalar(v) -> bool:
    return v is None or isinstance(v, (bool, int, float, str))


def _write(obj, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, float)):
        out.append(format_number(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.append("[]")
        elif all(_is_scalar(v) for v in items):
            out.append("[")
            for i, v in enumerate(items):
                if i:
                    out.append(", ")
                _write(v, out, indent)
            out.append("]")
        else:
            out.append("[\n")
            for i, v in enumerate(items):
                out.append(pad + "  ")
                _write(v, out, indent + 1)
                out.append(",\n" if i + 1 < len(items) else "\n")
            out.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
        else:
            out.append("{\n")
            keys = list(obj.keys())
            for i, k in enumerate(keys):
                if not isinstance(k, str):
                    raise TypeError(f"JSON object keys must be strings, got {k!r}")
                out.append(pad + "  " + json.dumps(k, ensure_ascii=False) + ": ")
                _write(obj[k], out, indent + 1)
                out.append(",\n" if i + 1 < len(keys) else "\n")
            out.append(pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    out: list[str] = []
    _write(obj, out, 0)
    return "".join(out)


def dump_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
