"""Analysis and run configuration.

Defaults follow the hierarchy procedure's stated choices: Delta-p = 0.2,
GESS reference order n = 2, q = 1, reference lag tau0 = 64, and the
flatness q-set {1.2, 1.6, 2, 2.4, 2.8}.  Everything else is an explicit,
reported parameter.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .structfn import MomentGrid, default_p_grid, default_tau_grid

DEFAULT_Q_SET = (1.2, 1.6, 2.0, 2.4, 2.8)
DEFAULT_P_SET = (1.0, 2.0, 3.0, 4.0)


def _tuple2(v, cast=float):
    return tuple(cast(x) for x in v)


@dataclass(frozen=True)
class AnalysisConfig:
    p_start: float = 0.2
    p_stop: float = 5.0
    p_step: float = 0.2
    tau_grid: tuple = field(default_factory=default_tau_grid)
    fit_tau_range: tuple = (2, 128)
    n: float = 2.0
    q: float = 1.0
    delta_p: float = 0.2
    rho_p_range: tuple = (0.2, 5.0)
    flat_p_set: tuple = DEFAULT_P_SET
    flat_q_set: tuple = DEFAULT_Q_SET
    tau0: int = 64
    flat_threshold: float = 0.05
    c_p_range: tuple = (1.0, 4.0)
    monofractal_trend: float = 0.01
    log_prices: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tau_grid", _tuple2(self.tau_grid, int))
        object.__setattr__(self, "fit_tau_range", _tuple2(self.fit_tau_range, int))
        for name in ("rho_p_range", "flat_p_set", "flat_q_set", "c_p_range"):
            object.__setattr__(self, name, _tuple2(getattr(self, name)))

    @property
    def grid(self) -> MomentGrid:
        return MomentGrid(default_p_grid(self.p_start, self.p_stop, self.p_step), self.tau_grid)

    def problems(self) -> list:
        """Every validation failure, so callers can report them all at once."""
        out = []
        if not self.p_start > 0:
            out.append("p_start must be > 0")
        if not self.p_step > 0:
            out.append("p_step must be > 0")
        if not self.p_stop >= self.p_start:
            out.append("p_stop must be >= p_start")
        try:
            grid = MomentGrid(default_p_grid(self.p_start, self.p_stop, self.p_step), self.tau_grid)
        except Exception as exc:   # noqa: BLE001 - collected, not swallowed
            out.append(f"grid: {exc}")
            grid = None
        lo, hi = self.fit_tau_range
        if len(self.fit_tau_range) != 2 or not 1 <= lo < hi:
            out.append("fit_tau_range must be (lo, hi) with 1 <= lo < hi")
        elif grid is not None and len(grid.taus_in(self.fit_tau_range)) < 3:
            out.append("fit_tau_range must contain at least 3 tau-grid points")
        if not (self.n > 0 and self.q > 0):
            out.append("n and q must be positive")
        if self.n == self.q:
            out.append("n and q must differ")
        if not self.delta_p > 0:
            out.append("delta_p must be > 0")
        if len(self.rho_p_range) != 2 or self.rho_p_range[0] <= 0 or \
                self.rho_p_range[1] < self.rho_p_range[0] + 4 * self.delta_p - 1e-9:
            out.append("rho_p_range must span at least 4 steps of delta_p (3 scatter pairs)")
        if not self.flat_p_set:
            out.append("flat_p_set must be non-empty")
        if not self.flat_q_set:
            out.append("flat_q_set must be non-empty")
        if self.tau0 not in self.tau_grid:
            out.append(f"tau0={self.tau0} must lie on the tau grid")
        elif not lo <= self.tau0 <= hi:
            out.append(f"tau0={self.tau0} must lie inside fit_tau_range")
        if not self.flat_threshold > 0:
            out.append("flat_threshold must be > 0")
        if len(self.c_p_range) != 2 or not 0 < self.c_p_range[0] <= self.c_p_range[1]:
            out.append("c_p_range must be (lo, hi) with 0 < lo <= hi")
        if grid is not None:
            needed = {"n": self.n, "q": self.q}
            needed.update({f"flat_p_set {p:g}": p for p in self.flat_p_set})
            needed.update({f"flat_q_set {q:g}": q for q in self.flat_q_set})
            for what, p in needed.items():
                try:
                    grid.p_index(p)
                except Exception:   # noqa: BLE001
                    out.append(f"{what} is not on the p-grid")
        if not self.monofractal_trend >= 0:
            out.append("monofractal_trend must be >= 0")
        if int(self.workers) < 1:
            out.append("workers must be >= 1")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError([f"unknown analysis option {k!r}" for k in unknown])
        return cls(**d)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def config_hash(self) -> str:
        # workers never affects results, so it is left out of the hash
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]
