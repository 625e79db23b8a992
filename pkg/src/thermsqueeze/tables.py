"""Deterministic CSV / JSON writers for column tables.

A table is a mapping of column name to a 1-D sequence of numbers (or
comma-free strings), all of equal length.  Floats are written with
``%.12e``; NaN marks undefined values and inf divergent ones.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.12e"


def _check(table: dict) -> int:
    lengths = {len(v) for v in table.values()}
    if len(lengths) > 1:
        raise ValueError(f"ragged table, column lengths {sorted(lengths)}")
    return lengths.pop() if lengths else 0


def _fmt(x) -> str:
    if isinstance(x, str):
        if "," in x or "\n" in x:
            raise ValueError(f"string cell {x!r} would break the CSV layout")
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT % x


def _json_value(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(FLOAT_FMT % x)


def to_csv(table: dict) -> str:
    n = _check(table)
    cols = list(table)
    lines = [",".join(cols)]
    for i in range(n):
        lines.append(",".join(_fmt(table[c][i]) for c in cols))
    return "\n".join(lines) + "\n"


def to_json(table: dict) -> str:
    n = _check(table)
    cols = list(table)
    records = [{c: _json_value(table[c][i]) for c in cols} for i in range(n)]
    return json.dumps(records, indent=1) + "\n"


def write_table(path: str | Path, table: dict, fmt: str = "csv") -> Path:
    """Write ``table`` to ``path`` + ".csv" or ".json"; return the file written."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    path = Path(path)
    path = path.parent / f"{path.name}.{fmt}"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(table) if fmt == "csv" else to_json(table))
    return path


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Inverse of ``to_csv`` for all-numeric tables (columns read back as floats)."""
    lines = Path(path).read_text().splitlines()
    cols = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    data = data.reshape(-1, len(cols))
    return {c: data[:, j] for j, c in enumerate(cols)}
