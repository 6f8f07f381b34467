"""Result tables and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__


@dataclass
class ResultTable:
    """Rows of scalars with named columns.

    Complex columns are written as ``<name>.re`` / ``<name>.im`` pairs.  A
    trailing ``mask`` column is 1 on rows that contain a NaN.
    """

    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    complex_columns: frozenset = frozenset()

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def header(self) -> list[str]:
        out = []
        for c in self.columns:
            out.extend([f"{c}.re", f"{c}.im"] if c in self.complex_columns else [c])
        return out + ["mask"]

    def flat_rows(self):
        for row in self.rows:
            flat, masked = [], False
            for col, value in zip(self.columns, row):
                parts = [np.real(value), np.imag(value)] if col in self.complex_columns else [value]
                for v in parts:
                    if isinstance(v, (float, np.floating)) and math.isnan(v):
                        masked = True
                    flat.append(v)
            yield flat, masked


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return None if math.isnan(v) else v
    return str(value)


def render_csv(table: ResultTable, meta: dict) -> str:
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {meta[key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.header())
    for flat, masked in table.flat_rows():
        writer.writerow([_fmt(v) for v in flat] + [str(int(masked))])
    return buf.getvalue()


def render_json(table: ResultTable, meta: dict) -> str:
    rows = [[_json_value(v) for v in flat] + [int(masked)] for flat, masked in table.flat_rows()]
    doc = {"meta": meta, "table": table.name, "columns": table.header(), "rows": rows}
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def base_meta(config_hash: str, subcommand: str, tolerances: dict) -> dict:
    tol = ", ".join(f"{k}={format(float(v), '.3g')}" for k, v in sorted(tolerances.items()))
    return {
        "config_hash": config_hash,
        "subcommand": subcommand,
        "tolerances": tol,
        "tool_version": __version__,
    }


def write_tables(tables, out_dir, meta: dict, as_json: bool = False) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for table in tables:
        path = out_dir / f"{table.name}.csv"
        path.write_text(render_csv(table, meta))
        written.append(path)
        if as_json:
            path = out_dir / f"{table.name}.json"
            path.write_text(render_json(table, meta))
            written.append(path)
    return written
