"""Trace files: a simulation run written as JSON or CSV.

Both formats carry the same header (variables, grid, dt), one row per
lattice time and the event list. When actions fire at a sample, the row holds
the state after the last of them. World variables are nested (row, column)
arrays in JSON and one column per cell, row-major, in CSV. Numbers are
written with `repr`, so both formats round-trip floats exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .execution import Execution
from .sim import SimResult, sample_time
from .trajectory import Key
from .types import BoolType, GridMapType, Vec2Type

FORMAT_VERSION = 1


def _scalar(v) -> Any:
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, float, np.integer, np.floating)):
        return float(v)
    return str(v)


def _tolist(v) -> Any:
    if isinstance(v, np.ndarray):
        return [_tolist(x) for x in v]
    if isinstance(v, (tuple, list)):
        return [_tolist(x) for x in v]
    return _scalar(v)


def sample_rows(alpha: Execution) -> Tuple[List[Key], Dict[Key, np.ndarray]]:
    """Per-variable arrays indexed by lattice step; at a cut the later piece wins."""
    first = alpha.trajectories[0]
    keys = sorted(first.schema, key=lambda k: (k.level, k.name))
    n = alpha.steps + 1
    out = {k: np.empty((n,) + first.data[k].shape[1:], dtype=first.data[k].dtype) for k in keys}
    for start, tau in zip(alpha.starts(), alpha.trajectories):
        for k in keys:
            out[k][start : start + tau.n] = tau.data[k]
    return keys, out


def trace_document(result: SimResult) -> dict:
    alpha = result.execution
    tau = alpha.trajectories[0]
    keys, arrays = sample_rows(alpha)
    g = result.config.grid
    variables = []
    for k in keys:
        decl = result.wa.var(k)
        variables.append(
            {
                "name": k.name,
                "level": k.level,
                "type": tau.schema[k].name,
                "class": decl.klass.value,
                "direction": decl.direction.value,
                "world": k in tau.world,
            }
        )
    rows = []
    for i in range(alpha.steps + 1):
        values = {str(k): _tolist(arrays[k][i]) for k in keys}
        rows.append({"t": sample_time(i, alpha.dt), "values": values})
    return {
        "format": FORMAT_VERSION,
        "automaton": result.wa.name,
        "dt": alpha.dt,
        "grid": {"x0": g.x0, "x1": g.x1, "y0": g.y0, "y1": g.y1, "nx": g.nx, "ny": g.ny},
        "variables": variables,
        "events": [{"t": e.time, "action": e.action.name, "level": e.action.level} for e in result.events],
        "rows": rows,
    }


def to_json(result: SimResult) -> str:
    return json.dumps(trace_document(result), ensure_ascii=False, indent=1) + "\n"


def _columns(var: dict, shape: Tuple[int, ...]) -> List[str]:
    base = f"{var['name']}@{var['level']}"
    if var["world"] or var["type"] == GridMapType.name:
        cells = [f"{base}[{r},{c}]" for r in range(shape[0]) for c in range(shape[1])]
    else:
        cells = [base]
    if var["type"] == Vec2Type.name:
        return [f"{c}.{axis}" for c in cells for axis in "xy"]
    return cells


def _flat(v) -> List[Any]:
    if isinstance(v, list):
        return [x for item in v for x in _flat(item)]
    return [v]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def to_csv(result: SimResult) -> str:
    """Header lines start with '#'; then a column header row and one row per sample."""
    doc = trace_document(result)
    buf = io.StringIO()
    meta = {k: doc[k] for k in ("format", "automaton", "dt", "grid", "variables", "events")}
    for line in json.dumps(meta, ensure_ascii=False, indent=1).splitlines():
        buf.write(f"# {line}\n")
    shape = (doc["grid"]["ny"], doc["grid"]["nx"])
    header = ["t"]
    for var in doc["variables"]:
        header.extend(_columns(var, shape))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in doc["rows"]:
        cells = [repr(float(row["t"]))]
        for var in doc["variables"]:
            cells.extend(_cell(x) for x in _flat(row["values"][f"{var['name']}@{var['level']}"]))
        writer.writerow(cells)
    return buf.getvalue()


def write_trace(result: SimResult, path, fmt: str = "json") -> Path:
    path = Path(path)
    if fmt == "json":
        text = to_json(result)
    elif fmt == "csv":
        text = to_csv(result)
    else:
        raise ValueError(f"unknown trace format {fmt!r}")
    path.write_text(text, encoding="utf-8")
    return path


# -- reading back, for comparisons and tests ----------------------------------------


def _parse_cell(text: str, type_name: str):
    if text == "":
        return None
    if type_name == BoolType.name:
        return text == "true"
    try:
        return float(text)
    except ValueError:
        return text


def read_json(path) -> Tuple[dict, List[Dict[str, List[Any]]]]:
    """(header, rows) with each row mapping a column name to its flat value list."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = []
    for row in doc["rows"]:
        flat = {"t": [row["t"]]}
        for name, v in row["values"].items():
            flat[name] = _flat(v)
        rows.append(flat)
    return {k: v for k, v in doc.items() if k != "rows"}, rows


def read_csv(path) -> Tuple[dict, List[Dict[str, List[Any]]]]:
    text = Path(path).read_text(encoding="utf-8")
    meta_lines, body = [], []
    for line in text.splitlines(keepends=True):
        (meta_lines if line.startswith("# ") else body).append(line)
    meta = json.loads("".join(line[2:] for line in meta_lines))
    reader = csv.reader(body)
    header = next(reader)
    types = {f"{v['name']}@{v['level']}": v["type"] for v in meta["variables"]}
    rows = []
    for cells in reader:
        flat: Dict[str, List[Any]] = {}
        for col, cell in zip(header, cells):
            name = col.split("[")[0].split(".")[0] if col != "t" else "t"
            flat.setdefault(name, []).append(_parse_cell(cell, types.get(name, "Real")))
        rows.append(flat)
    return meta, rows


def same_values(a: Sequence[Dict[str, List[Any]]], b: Sequence[Dict[str, List[Any]]]) -> bool:
    """Exact equality of two row lists, treating NaN as equal to NaN."""
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        if ra.keys() != rb.keys():
            return False
        for k in ra:
            for x, y in zip(ra[k], rb[k]):
                if isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y):
                    continue
                if x != y:
                    return False
            if len(ra[k]) != len(rb[k]):
                return False
    return True
