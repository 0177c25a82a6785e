"""Versioned CSV files for runs and fit inputs."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from ..errors import SchemaError
from ..profile import dyadic_scales

__all__ = [
    "RUN_SCHEMA",
    "POINTS_SCHEMA",
    "run_columns",
    "write_run_csv",
    "read_run_csv",
    "write_points_csv",
    "read_points_csv",
    "format_value",
]

RUN_SCHEMA = "wnaction-run v1"
POINTS_SCHEMA = "wnaction-points v1"

_BASE = ["replica", "L", "A_L", "A_plus", "A_minus", "A_tilde_minus", "H_L", "m40", "competitor"]
_INT_COLUMNS = {"replica", "L", "cap_saturated"}


def run_columns(L: int) -> list[str]:
    scales = dyadic_scales(1, L)
    return (
        _BASE
        + [f"coarse_{l}" for l in scales]
        + [f"psd_{rho}" for rho in scales]
        + ["cap_saturated"]
    )


def format_value(v) -> str:
    if isinstance(v, (bool, int)) and not isinstance(v, float):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_run_csv(path, rows, columns, config_hash: str) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write(f"# {RUN_SCHEMA} config_hash={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row[c]) for c in columns])


def _version_line(path, first: str, expected: str) -> str | None:
    if not first.startswith("#"):
        return None
    body = first[1:].strip()
    if not body.startswith(expected.split()[0]):
        raise SchemaError(f"{path}: unknown file type {body!r}", row=1)
    if not body.startswith(expected):
        raise SchemaError(f"{path}: unsupported schema version {body!r} (expected {expected!r})", row=1)
    return body


def read_run_csv(path) -> tuple[list[dict], dict]:
    """Rows as dicts of numbers plus metadata (``config_hash``, ``L``).

    Raises
    ------
    SchemaError
        On a missing or unknown version line, an unexpected column set, or
        a value that does not parse; the message names the row and column.
    """
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file", row=1)
    body = _version_line(path, lines[0], RUN_SCHEMA)
    if body is None:
        raise SchemaError(f"{path}: missing schema line '# {RUN_SCHEMA}'", row=1)
    meta = dict(tok.split("=", 1) for tok in body.split()[2:] if "=" in tok)
    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{path}: missing header", row=2) from None
    if "L" not in header:
        raise SchemaError(f"{path}: header lacks column", row=2, column="L")
    rows = []
    for i, raw in enumerate(reader, start=3):
        if len(raw) != len(header):
            raise SchemaError(f"{path}: expected {len(header)} fields, got {len(raw)}", row=i)
        row = {}
        for col, val in zip(header, raw):
            try:
                row[col] = int(val) if col in _INT_COLUMNS else float(val)
            except ValueError:
                raise SchemaError(f"{path}: cannot parse {val!r}", row=i, column=col) from None
        rows.append(row)
    if rows:
        L = int(rows[0]["L"])
        if header != run_columns(L):
            missing = [c for c in run_columns(L) if c not in header]
            extra = [c for c in header if c not in run_columns(L)]
            col = (missing or extra)[0] if (missing or extra) else None
            raise SchemaError(f"{path}: column set does not match schema for L={L}", row=2, column=col)
        meta["L"] = L
    return rows, meta


def write_points_csv(path, points) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write(f"# {POINTS_SCHEMA}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["L", "mean", "se"])
        for L, mean, se in points:
            w.writerow([int(L), format_value(mean), format_value(se)])


def read_points_csv(path) -> list[tuple]:
    """``(L, mean, se)`` triples; the version line is optional."""
    lines = Path(path).read_text().splitlines()
    start = 0
    if lines and lines[0].startswith("#"):
        _version_line(path, lines[0], POINTS_SCHEMA)
        start = 1
    reader = csv.reader(lines[start:])
    header = next(reader, None)
    if header != ["L", "mean", "se"]:
        raise SchemaError(f"{path}: expected header L,mean,se, got {header}", row=start + 1)
    out = []
    for i, raw in enumerate(reader, start=start + 2):
        if len(raw) != 3:
            raise SchemaError(f"{path}: expected 3 fields", row=i)
        vals = []
        for col, v in zip(header, raw):
            try:
                vals.append(int(v) if col == "L" else float(v))
            except ValueError:
                raise SchemaError(f"{path}: cannot parse {v!r}", row=i, column=col) from None
        out.append(tuple(vals))
    return out
