"""Reading and writing the comma-separated inputs and JSON fit results.

Tables are comma-separated with ``.`` decimals. ``NA`` (case-sensitive) marks a
missing value. An optional first row of column labels and an optional first
column of row labels are detected automatically: a row counts as a header if
none of its cells is numeric or ``NA``, and the first column counts as labels
if none of its body cells is.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import AllRowsIncomplete, DimensionMismatch, EmptyFile, NotSquare, UnparsableCell

MISSING = "NA"


@dataclass(frozen=True)
class Table:
    values: np.ndarray  # NaN where missing
    row_labels: tuple | None = None
    col_labels: tuple | None = None

    @property
    def mask(self):
        return np.isnan(self.values)


def _numeric(tok) -> bool:
    tok = tok.strip()
    if tok == MISSING:
        return True
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _parse(tok):
    tok = tok.strip()
    if tok == MISSING:
        return math.nan
    val = float(tok)
    if not math.isfinite(val):
        raise ValueError(tok)
    return val


def read_table(path) -> Table:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    lines = [(k + 1, r) for k, r in enumerate(rows) if any(c.strip() for c in r)]
    if not lines:
        raise EmptyFile(f"{path} contains no data")

    header = None
    if not any(_numeric(c) for c in lines[0][1]):
        header = [c.strip() for c in lines[0][1]]
        lines = lines[1:]
        if not lines:
            raise EmptyFile(f"{path} has a header but no data rows")
    labelled = all(not _numeric(r[0]) for _, r in lines)

    row_labels = [] if labelled else None
    width = None
    data = []
    for lineno, r in lines:
        start = 1 if labelled else 0
        if labelled:
            row_labels.append(r[0].strip())
        body = r[start:]
        if width is None:
            width = len(body)
        elif len(body) != width:
            raise DimensionMismatch(f"{path}: line {lineno} has {len(body)} values, expected {width}")
        vals = []
        for k, tok in enumerate(body):
            try:
                vals.append(_parse(tok))
            except ValueError:
                raise UnparsableCell(lineno, start + k + 1, tok) from None
        data.append(vals)

    col_labels = None
    if header is not None:
        if labelled and len(header) == width + 1:
            header = header[1:]
        if len(header) != width:
            raise DimensionMismatch(f"{path}: header has {len(header)} labels for {width} columns")
        col_labels = tuple(header)
    return Table(np.array(data, dtype=float), None if row_labels is None else tuple(row_labels), col_labels)


def load_dissimilarity(path) -> Table:
    t = read_table(path)
    n, m = t.values.shape
    if n != m:
        raise NotSquare(f"{path}: dissimilarity table is {n} x {m}")
    if t.row_labels is None and t.col_labels is not None:
        t = Table(t.values, t.col_labels, t.col_labels)
    return t


def load_conditioning(path, columns=None) -> Table:
    """Known-feature table, optionally restricted to ``columns`` (names or 0-based indices)."""
    t = read_table(path)
    if columns:
        idx = []
        for c in columns:
            if isinstance(c, int) or (isinstance(c, str) and c.isdigit()):
                idx.append(int(c))
            elif t.col_labels is not None and c in t.col_labels:
                idx.append(t.col_labels.index(c))
            else:
                raise DimensionMismatch(f"{path}: no column {c!r}")
        if any(i >= t.values.shape[1] for i in idx):
            raise DimensionMismatch(f"{path}: column index out of range")
        labels = None if t.col_labels is None else tuple(t.col_labels[i] for i in idx)
        t = Table(t.values[:, idx], t.row_labels, labels)
    if np.isnan(t.values).any(axis=1).all():
        raise AllRowsIncomplete(f"{path}: every row has a missing value")
    return t


def align_rows(table: Table, labels) -> Table:
    """Reorder ``table`` rows to follow ``labels``."""
    if table.row_labels is None or labels is None or tuple(labels) == table.row_labels:
        return table
    if sorted(labels) != sorted(table.row_labels):
        raise DimensionMismatch("row labels of the two tables do not match")
    pos = {lab: k for k, lab in enumerate(table.row_labels)}
    order = [pos[lab] for lab in labels]
    return Table(table.values[order], tuple(labels), table.col_labels)


def _fmt(x) -> str:
    return MISSING if math.isnan(x) else repr(float(x))


def write_table(path, values, row_labels=None, col_labels=None):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        if col_labels is not None:
            wr.writerow(([""] if row_labels is not None else []) + list(col_labels))
        for k, row in enumerate(values):
            lead = [row_labels[k]] if row_labels is not None else []
            wr.writerow(lead + [_fmt(x) for x in row])


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()] if obj.ndim else _jsonable(obj.item())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=False)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
