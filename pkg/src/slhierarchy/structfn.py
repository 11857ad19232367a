"""Structure functions X_p(tau) = <|r(t, tau)|^p> and their scaling exponents."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (DataError, DegenerateRange, EmptySeries, GridMismatch,
                     GridTooLarge, NonpositiveMoment)
from .ingest import OVERLAP_MODE, PriceSeries, ReturnSeries, compute_returns
from .regression import linear_fit

# Fixed reduction block; summation order inside a cell never depends on the
# number of workers.
CHUNK = 1 << 16
GRID_TOL = 1e-9


def default_p_grid(start=0.2, stop=5.0, step=0.2):
    n = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(n))


def default_tau_grid(high_frequency=False):
    top = 10 if high_frequency else 8
    return tuple(2 ** k for k in range(top + 1))


@dataclass(frozen=True)
class MomentGrid:
    p_grid: tuple = field(default_factory=default_p_grid)
    tau_grid: tuple = field(default_factory=default_tau_grid)

    def __post_init__(self):
        p = tuple(float(x) for x in self.p_grid)
        t = tuple(int(x) for x in self.tau_grid)
        if not p or not t:
            raise DataError("moment grid must be non-empty")
        if any(x <= 0 for x in p) or any(b <= a for a, b in zip(p, p[1:])):
            raise DataError("p_grid must be strictly increasing and positive")
        if any(x < 1 for x in t) or any(b <= a for a, b in zip(t, t[1:])):
            raise DataError("tau_grid must be strictly increasing integers >= 1")
        if any(int(x) != x for x in self.tau_grid):
            raise DataError("tau_grid entries must be integers")
        object.__setattr__(self, "p_grid", p)
        object.__setattr__(self, "tau_grid", t)

    def p_index(self, p: float) -> int:
        for i, x in enumerate(self.p_grid):
            if abs(x - p) <= GRID_TOL:
                return i
        raise GridMismatch(f"p={p:g} is not on the p-grid")

    def tau_index(self, tau: int) -> int:
        try:
            return self.tau_grid.index(int(tau))
        except ValueError:
            raise GridMismatch(f"tau={tau} is not on the tau-grid") from None

    def taus_in(self, tau_range) -> list:
        lo, hi = tau_range
        return [t for t in self.tau_grid if lo <= t <= hi]


def structure_function(returns, p: float) -> float:
    """Mean of |r|^p; blockwise sums combined with math.fsum."""
    r = returns.values if isinstance(returns, ReturnSeries) else np.asarray(returns, dtype=np.float64)
    n = r.size
    if n == 0:
        raise EmptySeries("no returns to average")
    if not p > 0:
        raise DataError(f"moment order must be positive, got {p}")
    a = np.abs(r)
    partials = [float(np.sum(a[i:i + CHUNK] ** p)) for i in range(0, n, CHUNK)]
    return math.fsum(partials) / n


@dataclass(frozen=True)
class StructureFunctionTable:
    grid: MomentGrid
    moments: np.ndarray          # [p index, tau index]
    counts: tuple                # samples averaged per tau
    source_label: str = ""
    overlap: str = OVERLAP_MODE

    def __post_init__(self):
        m = np.array(self.moments, dtype=np.float64)
        if m.shape != (len(self.grid.p_grid), len(self.grid.tau_grid)):
            raise DataError(f"moment matrix shape {m.shape} does not match grid")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise DataError("moments must be finite and non-negative")
        m.setflags(write=False)
        object.__setattr__(self, "moments", m)
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    def moment(self, p, tau) -> float:
        return float(self.moments[self.grid.p_index(p), self.grid.tau_index(tau)])

    def log_moments(self, p, taus) -> np.ndarray:
        """Natural logs of X_p over ``taus``; refuses zero cells."""
        i = self.grid.p_index(p)
        out = []
        for t in taus:
            v = self.moments[i, self.grid.tau_index(t)]
            if not v > 0:
                raise NonpositiveMoment(p, t)
            out.append(math.log(v))
        return np.array(out)

    # -- serialization -----------------------------------------------------
    def to_dict(self):
        return {
            "source_label": self.source_label,
            "overlap": self.overlap,
            "p_grid": list(self.grid.p_grid),
            "tau_grid": list(self.grid.tau_grid),
            "counts": list(self.counts),
            "moments": [[float(v) for v in row] for row in self.moments],
        }

    @classmethod
    def from_dict(cls, d):
        grid = MomentGrid(tuple(d["p_grid"]), tuple(d["tau_grid"]))
        return cls(grid, np.array(d["moments"], dtype=np.float64),
                   tuple(d["counts"]), d.get("source_label", ""),
                   d.get("overlap", OVERLAP_MODE))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        lines = ["tau," + ",".join(repr(p) for p in self.grid.p_grid)]
        for j, t in enumerate(self.grid.tau_grid):
            lines.append(str(t) + "," + ",".join(repr(float(v)) for v in self.moments[:, j]))
        return "\n".join(lines) + "\n"


def build_table(series: PriceSeries, grid: MomentGrid | None = None,
                workers: int = 1) -> StructureFunctionTable:
    """Evaluate every (p, tau) cell of the grid.

    The largest lag may be at most a quarter of the series length.  Work is
    split across ``workers`` threads by lag; results do not depend on the
    worker count.
    """
    grid = grid or MomentGrid()
    n = len(series)
    if max(grid.tau_grid) > n / 4:
        raise GridTooLarge(f"max tau {max(grid.tau_grid)} exceeds series length/4 = {n / 4:g}")

    def column(tau):
        r = compute_returns(series, tau)
        return [structure_function(r, p) for p in grid.p_grid]

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(column, grid.tau_grid))
    else:
        cols = [column(t) for t in grid.tau_grid]
    moments = np.array(cols, dtype=np.float64).T
    counts = tuple(n - t for t in grid.tau_grid)
    return StructureFunctionTable(grid, moments, counts, series.label)


@dataclass(frozen=True)
class ScalingFit:
    p_grid: tuple
    xi: tuple
    stderr: tuple
    r2: tuple
    tau_range: tuple

    def xi_at(self, p):
        for x, v in zip(self.p_grid, self.xi):
            if abs(x - p) <= GRID_TOL:
                return v
        raise GridMismatch(f"p={p:g} not in fit")

    def to_dict(self):
        return {"p": list(self.p_grid), "xi": list(self.xi),
                "stderr": list(self.stderr), "r2": list(self.r2),
                "tau_range": list(self.tau_range)}


def fit_xi(table: StructureFunctionTable, tau_range=(2, 128)) -> ScalingFit:
    """OLS slope of ln X_p(tau) against ln tau, one fit per p."""
    taus = table.grid.taus_in(tau_range)
    if len(taus) < 3:
        raise DegenerateRange(f"tau range {tuple(tau_range)} holds {len(taus)} grid points, need 3")
    lt = np.log(np.array(taus, dtype=np.float64))
    xi, se, r2 = [], [], []
    for p in table.grid.p_grid:
        f = linear_fit(lt, table.log_moments(p, taus))
        xi.append(f.slope)
        se.append(f.stderr)
        r2.append(f.r2)
    return ScalingFit(table.grid.p_grid, tuple(xi), tuple(se), tuple(r2),
                      (taus[0], taus[-1]))
