"""Curve-matrix CSV files.

One curve per row. An optional first row gives the grid abscissae; without
it the grid is ``0, 1, ..., m-1`` (e.g. hours of the day). Empty cells and
``NA`` mark missing measurements.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .errors import KFSDError, NonFiniteValue
from .fdata import EQUIDISTANT_RTOL, FunctionalSample, Grid, LABEL_NORMAL, LABEL_OUTLIER
from .serialize import FLOAT_FORMAT

MISSING = {"", "na", "nan", "null"}


class CSVFormatError(KFSDError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (line {row}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


def _parse_row(cells, lineno):
    out = []
    for j, cell in enumerate(cells, start=1):
        text = cell.strip()
        if text.lower() in MISSING:
            out.append(np.nan)
            continue
        try:
            out.append(float(text))
        except ValueError:
            raise CSVFormatError(f"cannot parse {text!r} as a number", lineno, j) from None
    return out


def _looks_like_grid(row):
    r = np.asarray(row, dtype=float)
    if r.size < 2 or not np.all(np.isfinite(r)):
        return False
    steps = np.diff(r)
    if np.any(steps <= 0):
        return False
    h = (r[-1] - r[0]) / (r.size - 1)
    return bool(np.max(np.abs(steps - h)) <= EQUIDISTANT_RTOL * max(abs(h), 1.0))


def parse_curves(text, header="auto", drop_incomplete=False):
    """Parse CSV text into ``(sample, kept_rows)``.

    ``header`` is ``True``, ``False`` or ``"auto"`` (first row taken as the
    grid when it is strictly increasing and equidistant). Rows with missing
    cells raise :class:`NonFiniteValue` unless ``drop_incomplete`` is set,
    in which case they are skipped. ``kept_rows`` lists the zero-based data
    row index of every curve in the sample.
    """
    reader = csv.reader(io.StringIO(text))
    rows = []
    for lineno, cells in enumerate(reader, start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        rows.append((lineno, _parse_row(cells, lineno)))
    if not rows:
        raise CSVFormatError("no data rows found")
    use_header = header if header != "auto" else _looks_like_grid(rows[0][1])
    if use_header:
        lineno, first = rows[0]
        try:
            grid = Grid(first)
        except KFSDError as exc:
            raise CSVFormatError(f"invalid grid header: {exc}", lineno) from None
        rows = rows[1:]
    else:
        grid = Grid(np.arange(len(rows[0][1]), dtype=float))
    data, kept = [], []
    for k, (lineno, vals) in enumerate(rows):
        if len(vals) != grid.m:
            raise CSVFormatError(f"expected {grid.m} values, found {len(vals)}", lineno)
        if not np.all(np.isfinite(vals)):
            if drop_incomplete:
                continue
            raise NonFiniteValue(k, f"data row {k} (line {lineno}) has a missing or non-finite value")
        data.append(vals)
        kept.append(k)
    if not data:
        raise CSVFormatError("no complete curves left")
    return FunctionalSample(np.array(data), grid), kept


def read_curves(path, header="auto", drop_incomplete=False):
    return parse_curves(Path(path).read_text(), header=header, drop_incomplete=drop_incomplete)


def format_curves(sample: FunctionalSample, header=True):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow([format(float(s), FLOAT_FORMAT) for s in sample.grid.points])
    for row in sample.values:
        writer.writerow([format(float(v), FLOAT_FORMAT) for v in row])
    return buf.getvalue()


def format_labels(is_outlier):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["curve_index", "label"])
    for i, o in enumerate(is_outlier):
        writer.writerow([i, LABEL_OUTLIER if o else LABEL_NORMAL])
    return buf.getvalue()


def read_labels(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return np.array([row["label"] == LABEL_OUTLIER for row in reader], dtype=bool)
