"""CSV schema of the simulation result tables.

The columns mirror the emitter on the simulation side; this module keeps
its own copy so the plotting package has no import-time dependency on the
simulator.
"""

from __future__ import annotations

import csv

CSV_COLUMNS = [
    "model", "L", "p", "beta", "gamma", "chi", "seed_base", "n_traj",
    "t", "observable", "cut", "value", "stderr", "n_samples",
]

_INT_COLUMNS = {"L", "seed_base", "n_traj", "t", "n_samples"}
_FLOAT_COLUMNS = {"p", "beta", "gamma", "value", "stderr"}
_OPTIONAL_INT = {"chi", "cut"}


class SchemaError(ValueError):
    """The input file does not match the result-table schema."""


def _convert(column: str, text: str):
    if text == "":
        return None
    if column in _INT_COLUMNS or column in _OPTIONAL_INT:
        return int(text)
    if column in _FLOAT_COLUMNS:
        return float(text)
    return text


def read_table(path) -> list[dict]:
    """Read a result CSV into a list of typed row dicts.

    Raises SchemaError (naming every missing field) when the header does
    not contain all schema columns.  An empty body is valid and yields
    an empty list.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise SchemaError(
                "input is missing required columns: " + ", ".join(missing))
        rows = []
        for raw in reader:
            try:
                rows.append({c: _convert(c, raw[c] or "") for c in CSV_COLUMNS})
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"malformed row {reader.line_num}: {exc}")
    return rows


def select(rows, observable=None, cut="any", model=None):
    """Filter rows by observable name, cut, and model.

    cut="any" keeps all cuts, None keeps only cut-less rows, an integer
    keeps that cut.
    """
    out = []
    for r in rows:
        if observable is not None and r["observable"] != observable:
            continue
        if cut != "any" and r["cut"] != cut:
            continue
        if model is not None and r["model"] != model:
            continue
        out.append(r)
    return out
