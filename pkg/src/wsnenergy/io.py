"""Delimited result files: a ``# key: value`` header block, then a CSV table.

The JSON variant carries the same content as ``{"meta": ..., "columns": ...,
"rows": ...}``. Floats are written with ``repr`` so files round-trip exactly
and reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

FORMATS = ("csv", "json")


@dataclass
class Table:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name):
        j = self.columns.index(name)
        return [r[j] for r in self.rows]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def parse_value(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def check_writable(path) -> None:
    """Fail early if ``path`` cannot be written."""
    path = os.fspath(path)
    parent = os.path.dirname(os.path.abspath(path))
    if os.path.isdir(path):
        raise OSError(f"output path is a directory: {path}")
    if not os.path.isdir(parent):
        raise OSError(f"output directory does not exist: {parent}")
    if os.path.exists(path) and not os.access(path, os.W_OK):
        raise OSError(f"output file is not writable: {path}")
    if not os.path.exists(path) and not os.access(parent, os.W_OK):
        raise OSError(f"output directory is not writable: {parent}")


def render_table(table: Table, fmt: str = "csv") -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if fmt == "json":
        doc = {
            "meta": {k: _json_value(v) for k, v in table.meta.items()},
            "columns": list(table.columns),
            "rows": [[_json_value(v) for v in r] for r in table.rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    for k, v in table.meta.items():
        buf.write(f"# {k}: {format_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        if len(r) != len(table.columns):
            raise ValueError("row length does not match the header")
        w.writerow([format_value(v) for v in r])
    return buf.getvalue()


def _json_value(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return format_value(v)
    return v


def write_table(path, table: Table, fmt: str = "csv") -> None:
    text = render_table(table, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_table(path) -> Table:
    """Read a file written by :func:`write_table`; the format is sniffed."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raise ValueError(f"{path}: empty file")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = [[parse_value(v) if isinstance(v, str) else v for v in r] for r in doc["rows"]]
        meta = {k: parse_value(v) if isinstance(v, str) else v for k, v in doc["meta"].items()}
        return Table(doc["columns"], rows, meta)
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = parse_value(val.strip())
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError(f"{path}: no header row")
    reader = csv.reader(body)
    columns = next(reader)
    rows = []
    for lineno, r in enumerate(reader, start=2):
        if len(r) != len(columns):
            raise ValueError(f"{path}: row {lineno} has {len(r)} fields, expected {len(columns)}")
        rows.append([parse_value(v) for v in r])
    return Table(columns, rows, meta)
