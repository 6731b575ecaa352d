"""Deterministic JSON and RFC-4180 CSV output, plus space/function CSV files."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math

import numpy as np

from .errors import StructuralError
from .space import PointSpace


def plain(obj):
    """Recursively convert numpy values to JSON-safe Python; non-finite floats
    become the strings "inf", "-inf" and "nan"."""
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
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def config_hash(cfg: dict) -> str:
    canon = json.dumps(plain(cfg), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _cell(v):
    v = plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def space_csv(space: PointSpace, values=None) -> str:
    d = space.coords.shape[1]
    header = ["index"] + [f"coord{k}" for k in range(d)] + ["mu"]
    if values is not None:
        header.append("value")
    rows = []
    for i in range(space.n):
        row = [i, *space.coords[i].tolist(), float(space.mu[i])]
        if values is not None:
            row.append(float(values[i]))
        rows.append(row)
    return csv_text(header, rows)


def read_space_csv(path) -> tuple[PointSpace, np.ndarray | None]:
    """Inverse of :func:`space_csv`: columns index, coord..., mu[, value]."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise StructuralError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    if "mu" not in header or header[0] != "index":
        raise StructuralError(f"{path}: need columns index, coord..., mu[, value]")
    try:
        data = np.array([[float(x) for x in r] for r in body], dtype=float)
    except ValueError as exc:
        raise StructuralError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[0] == 0:
        raise StructuralError(f"{path}: no data rows")
    if not np.array_equal(data[:, 0], np.arange(data.shape[0])):
        raise StructuralError(f"{path}: index column must be 0..n-1 in order")
    cols = [h for h in header if h.startswith("coord")]
    coords = data[:, 1:1 + len(cols)] if cols else np.arange(data.shape[0], dtype=float)
    mu = data[:, header.index("mu")]
    values = data[:, header.index("value")] if "value" in header else None
    return PointSpace(coords, mu), values
