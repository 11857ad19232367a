"""Loading price series and differencing them into returns."""
from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, TauOutOfRange, TooShort, DataError

# Returns are always fully overlapping (stride 1).
OVERLAP_MODE = "overlapping"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """Uniformly sampled scalar series s(t); index i is time start_index + i."""

    values: np.ndarray
    start_index: int = 0
    label: str = ""

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1:
            raise DataError("price series must be one-dimensional")
        if arr.size < 2:
            raise TooShort(f"need at least 2 samples, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value at index {bad}")
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def window(self, start: int, stop: int) -> "PriceSeries":
        return PriceSeries(self.values[start:stop],
                           start_index=self.start_index + start,
                           label=f"{self.label}[{start}:{stop}]")

    def content_hash(self) -> str:
        return hashlib.sha256(self.values.tobytes()).hexdigest()


@dataclass(frozen=True)
class ReturnSeries:
    tau: int
    values: np.ndarray
    source_label: str = ""
    overlap: str = field(default=OVERLAP_MODE)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self):
        return self.values.size


def compute_returns(series: PriceSeries, tau: int) -> ReturnSeries:
    """r(t, tau) = s(t + tau) - s(t) for every t, stride 1."""
    n = len(series)
    if isinstance(tau, bool) or int(tau) != tau or not 1 <= tau <= n - 1:
        raise TauOutOfRange(f"tau={tau} outside [1, {n - 1}]")
    tau = int(tau)
    v = series.values
    return ReturnSeries(tau, v[tau:] - v[:-tau], series.label)


def log_prices(series: PriceSeries) -> PriceSeries:
    v = series.values
    if np.any(v <= 0):
        bad = int(np.flatnonzero(v <= 0)[0])
        raise DataError(f"log transform needs positive prices; index {bad} is {v[bad]!r}")
    return PriceSeries(np.log(v), series.start_index, series.label)


def _parse_float(text):
    try:
        x = float(text)
    except ValueError:
        return None
    return x


def _detect_delimiter(first_line: str) -> str:
    return "\t" if "\t" in first_line else ","


def load_price_series(path, column=0, label=None) -> PriceSeries:
    """Read one value column from a comma- or tab-separated file.

    ``column`` is a zero-based index or a header name.  A header row is
    assumed when a column name is given, or when the selected field of the
    first row is not a number.  Malformed rows raise ParseError with the
    1-based line number; nothing is skipped except trailing blank lines.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise TooShort(f"{path}: file is empty")

    delim = _detect_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delim))

    if isinstance(column, str) and not column.lstrip("-").isdigit():
        header = [h.strip() for h in rows[0]]
        if column not in header:
            raise ParseError(1, f"column {column!r} not in header {header}")
        col = header.index(column)
        first = 1
    else:
        col = int(column)
        if col < 0:
            raise ParseError(1, f"negative column index {col}")
        first = 0
        if col < len(rows[0]) and _parse_float(rows[0][col].strip()) is None:
            first = 1

    values = []
    for lineno, row in enumerate(rows[first:], start=first + 1):
        if col >= len(row):
            raise ParseError(lineno, f"missing column {col}")
        field_text = row[col].strip()
        if not field_text:
            raise ParseError(lineno, "empty value")
        x = _parse_float(field_text)
        if x is None:
            raise ParseError(lineno, f"cannot parse {field_text!r} as a number")
        if not np.isfinite(x):
            raise ParseError(lineno, f"non-finite value {field_text!r}")
        values.append(x)

    if len(values) < 2:
        raise TooShort(f"{path}: {len(values)} valid samples, need at least 2")
    if label is None:
        label = os.path.splitext(os.path.basename(path))[0]
    return PriceSeries(values, 0, label)


def write_price_series(series: PriceSeries, path, header="value"):
    """Inverse of load_price_series; repr() keeps every float bit-exact."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header + "\n")
        fh.write("\n".join(repr(float(x)) for x in series.values))
        fh.write("\n")
