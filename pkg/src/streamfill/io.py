"""CSV series files.

Header ``date,<station1>,<station2>,...``; one row per day as
``YYYY-MM-DD,<float|empty>,...``. An empty cell is a missing observation.
Values are written with ``repr`` so a write/read round trip is exact.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from pathlib import Path

import numpy as np

from .core import SeriesMatrix
from .errors import NonMonotoneDates, ParseError


def read_series_csv(path) -> SeriesMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_series_csv(fh)


load_series_csv = read_series_csv


def parse_series_csv(lines) -> SeriesMatrix:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, 1, "empty file") from None
    if not header or header[0].strip().lower() != "date":
        raise ParseError(1, 1, "first header column must be 'date'")
    stations = [h.strip() for h in header[1:]]
    if not stations:
        raise ParseError(1, 2, "no station columns")
    for j, s in enumerate(stations):
        if not s:
            raise ParseError(1, j + 2, "empty station name")
        if s in stations[:j]:
            raise ParseError(1, j + 2, f"duplicate station {s!r}")
    dates, rows = [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise ParseError(line_no, len(row), f"expected {len(header)} fields, got {len(row)}")
        try:
            day = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(line_no, 1, f"bad date {row[0]!r}") from None
        if dates and day <= dates[-1]:
            raise NonMonotoneDates(f"line {line_no}: {day} does not follow {dates[-1]}")
        vals = []
        for col, cell in enumerate(row[1:], start=2):
            cell = cell.strip()
            if not cell:
                vals.append(math.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(line_no, col, f"not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(line_no, col, f"non-finite value {cell!r}")
            vals.append(v)
        dates.append(day)
        rows.append(vals)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(stations))
    return SeriesMatrix.from_array(np.array(dates, dtype="datetime64[D]"), stations, values)


def format_series_csv(sm: SeriesMatrix) -> str:
    out = ["date," + ",".join(sm.stations)]
    for t, day in enumerate(sm.dates):
        cells = [repr(float(v)) if m else "" for v, m in zip(sm.values[t], sm.mask[t])]
        out.append(str(day) + "," + ",".join(cells))
    return "\n".join(out) + "\n"


def write_series_csv(sm: SeriesMatrix, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_series_csv(sm), encoding="utf-8")
    return path
