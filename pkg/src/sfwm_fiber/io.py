"""Deterministic writers for tables, reports, plots and JSA grids.

Numbers are printed with a fixed ``%.10g`` format so identical inputs give
byte-identical files.  CSV and JSON files carry the resolved run
configuration (as ``#`` comment lines, or a ``config`` field).
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_csv",
    "read_csv",
    "write_json",
    "write_jsa",
    "read_jsa",
    "save_svg",
    "JSA_MAGIC",
]

JSA_MAGIC = b"SFWMJSA1"


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0:
        return "0"
    return f"{x:.10g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else float(fmt(x))
    return obj


def write_csv(path, header, rows, comments=()) -> Path:
    """UTF-8 CSV with ``#`` comment lines, a header row and ``.`` decimals."""
    path = Path(path)
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([fmt(v) for v in row] for row in rows)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    return path


def read_csv(path):
    """Header and rows of a file written by :func:`write_csv` (strings)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return [h.strip() for h in rows[0]], [[c.strip() for c in r] for r in rows[1:]]


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path


def write_jsa(path, values, header: dict) -> Path:
    """Binary container: magic, uint64 header length, UTF-8 JSON header, complex128 C-order data."""
    values = np.ascontiguousarray(values, dtype="<c16")
    meta = dict(_jsonable(header))
    meta["shape"] = list(values.shape)
    meta["dtype"] = "complex128-le"
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(JSA_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(values.tobytes())
    return path


def read_jsa(path):
    """Return ``(values, header)`` from a file written by :func:`write_jsa`."""
    data = Path(path).read_bytes()
    if data[:8] != JSA_MAGIC:
        raise ValueError(f"{path}: not a JSA container")
    (n,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + n].decode("utf-8"))
    values = np.frombuffer(data[16 + n:], dtype="<c16").reshape(header["shape"])
    return values, header


def save_svg(fig, path) -> Path:
    """Save a matplotlib figure as reproducible SVG (no date, fixed ids)."""
    import matplotlib

    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": "sfwm-fiber", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path
