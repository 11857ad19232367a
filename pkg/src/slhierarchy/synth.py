"""Synthetic series with known scaling, and a naive moment oracle.

Log-Poisson cascade
-------------------
Multipliers are W = a * beta**Y with Y ~ Poisson(lam).  The Poisson moment
generating function gives E[W^p] = a^p exp(lam (beta^p - 1)); matching
2**-(h0 p + C (1 - beta^p)) for every p forces

    a = 2**-h0,    lam = C ln 2.

The coefficient of a node at depth k is the product of the k multipliers
on its path from the root, so E[c_k^p] = 2**(-k xi(p)).

A signed cumulative sum of leaf weights cannot carry this scaling (with
independent signs the variance of a window sum grows linearly in tau).  The
signal is instead a Haar series on the same dyadic tree:

    x(i) = sum_k  eps_{k,j} c_{k,j} h_k(i),

where h_k is +1 on the left half of node (k, j) and -1 on the right half,
and eps are fair independent signs.  An increment over a lag of 2^s is then
of the order of the coefficients at depth levels - s.  Scales below the
sampling step are not truncated: each sample also carries the
contribution of the sub-sample nodes on its leftmost descending path,
summed over TAIL_LEVELS further levels.  Without that tail the shortest
lags are biased.

Haar atoms are discontinuous, so realizable exponents satisfy xi(p) <= 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptySeries, InvalidH, LengthUnsupported, SpecInvalid
from .ingest import PriceSeries, ReturnSeries, compute_returns
from .structfn import MomentGrid, StructureFunctionTable, default_p_grid

TAIL_LEVELS = 32
MAX_LEVELS = 24


def theoretical_xi(beta, C, h0, p):
    return h0 * p + C * (1.0 - beta ** p)


def analytic_table(beta, C, h0, grid: MomentGrid | None = None, label="analytic"):
    """Exact table X_p(tau) = tau**xi(p)."""
    grid = grid or MomentGrid()
    p = np.array(grid.p_grid)[:, None]
    t = np.array(grid.tau_grid, dtype=np.float64)[None, :]
    moments = t ** theoretical_xi(beta, C, h0, p)
    return StructureFunctionTable(grid, moments, tuple(0 for _ in grid.tau_grid), label)


def power_law_table(xi_of_p, grid: MomentGrid | None = None, label="power-law"):
    grid = grid or MomentGrid()
    moments = [[float(t) ** xi_of_p(p) for t in grid.tau_grid] for p in grid.p_grid]
    return StructureFunctionTable(grid, np.array(moments), tuple(0 for _ in grid.tau_grid), label)


@dataclass(frozen=True)
class CascadeSpec:
    beta: float
    C: float
    h0: float
    levels: int
    seed: int

    def problems(self):
        out = []
        if not 0.0 < self.beta < 1.0:
            out.append(f"beta={self.beta} must lie in (0, 1)")
        if not self.C > 0:
            out.append(f"C={self.C} must be positive")
        if not math.isfinite(self.h0):
            out.append("h0 must be finite")
        if isinstance(self.levels, bool) or int(self.levels) != self.levels \
                or not 1 <= self.levels <= MAX_LEVELS:
            out.append(f"levels={self.levels} must be an integer in [1, {MAX_LEVELS}]")
        if self.seed is None or isinstance(self.seed, bool) or int(self.seed) != self.seed \
                or not 0 <= int(self.seed) < 2 ** 64:
            out.append("seed must be an integer in [0, 2**64)")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise SpecInvalid(problems)
        return self

    @property
    def rate(self):
        """Poisson rate of multiplier events per level."""
        return self.C * math.log(2.0)

    @property
    def amplitude(self):
        return 2.0 ** (-self.h0)

    def xi(self, p):
        return theoretical_xi(self.beta, self.C, self.h0, p)

    def to_dict(self):
        return {"kind": "cascade", "beta": self.beta, "C": self.C, "h0": self.h0,
                "levels": int(self.levels), "seed": int(self.seed),
                "rate": self.rate, "amplitude": self.amplitude,
                "tail_levels": TAIL_LEVELS}


@dataclass(frozen=True)
class FbmSpec:
    H: float
    length: int
    seed: int

    def xi(self, p):
        return self.H * p

    def to_dict(self):
        return {"kind": "fbm", "H": self.H, "length": int(self.length), "seed": int(self.seed)}


@dataclass(frozen=True)
class SyntheticSeries:
    series: PriceSeries
    spec: object
    extra: dict = field(default_factory=dict, compare=False)

    def theoretical_xi(self, p):
        return self.spec.xi(p)

    def sidecar(self, p_grid=None):
        p_grid = p_grid or default_p_grid()
        return {"spec": self.spec.to_dict(), "length": len(self.series),
                "theoretical_xi": {"p": list(p_grid),
                                   "xi": [self.spec.xi(p) for p in p_grid]}}


def _multipliers(rng, spec, size):
    return spec.amplitude * spec.beta ** rng.poisson(spec.rate, size)


def cascade_weights(spec: CascadeSpec, rng=None):
    """Node coefficients c_k for depth k = 0..levels (c_0 = 1, the root)."""
    spec.validate()
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    out = [np.ones(1)]
    for k in range(1, spec.levels + 1):
        out.append(np.repeat(out[-1], 2) * _multipliers(rng, spec, 2 ** k))
    return out


def generate_cascade(spec: CascadeSpec) -> SyntheticSeries:
    spec.validate()
    L = int(spec.levels)
    n = 2 ** L
    rng = np.random.default_rng(int(spec.seed))
    weights = cascade_weights(spec, rng)

    x = np.zeros(n)
    for k in range(L):
        half = 2 ** (L - k - 1)
        eps = rng.choice((-1.0, 1.0), size=2 ** k)
        amp = np.repeat(eps * weights[k], 2 * half).reshape(2 ** k, 2 * half)
        amp[:, half:] *= -1.0
        x += amp.ravel()

    # sub-sample nodes along each sample's leftmost path
    tail = np.zeros(n)
    path = weights[L].copy()
    for _ in range(TAIL_LEVELS):
        tail += rng.choice((-1.0, 1.0), size=n) * path
        path *= _multipliers(rng, spec, n)
    x += tail

    label = f"cascade_b{spec.beta:g}_C{spec.C:g}_h{spec.h0:g}_L{L}_s{spec.seed}"
    return SyntheticSeries(PriceSeries(x, 0, label), spec)


def generate_fbm(H, length, seed) -> SyntheticSeries:
    """Fractional Brownian motion by circulant embedding (Davies-Harte).

    Exact in distribution.  ``length`` must be a power of two unless
    H = 0.5, which is a plain Gaussian random walk.  The path starts at the
    first increment, so it has ``length`` samples.
    """
    if not 0.0 < H < 1.0:
        raise InvalidH(f"H={H} must lie in (0, 1)")
    if seed is None:
        raise SpecInvalid("seed is required")
    length = int(length)
    if length < 2:
        raise LengthUnsupported(f"length={length} must be >= 2")
    rng = np.random.default_rng(int(seed))
    if H == 0.5:
        inc = rng.standard_normal(length)
    else:
        if length & (length - 1):
            raise LengthUnsupported(f"length={length} must be a power of 2 for H != 0.5")
        inc = _davies_harte(H, length, rng)
    label = f"fbm_H{H:g}_n{length}_s{seed}"
    return SyntheticSeries(PriceSeries(np.cumsum(inc), 0, label), FbmSpec(H, length, int(seed)))


def fgn_autocovariance(H, k):
    k = np.abs(np.asarray(k, dtype=np.float64))
    return 0.5 * ((k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def _davies_harte(H, n, rng):
    gam = fgn_autocovariance(H, np.arange(n + 1))
    row = np.concatenate([gam, gam[-2:0:-1]])          # length 2n
    lam = np.fft.fft(row).real
    if np.min(lam) < -1e-10 * np.max(lam):
        raise LengthUnsupported("circulant embedding is not non-negative definite")
    lam = np.clip(lam, 0.0, None)
    m = row.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    w = np.fft.fft(np.sqrt(lam / m) * z)
    return w.real[:n]


def brute_force_moment(series, p, tau=None):
    """<|r(t, tau)|^p> by an explicit loop with exactly rounded summation.

    Accepts a PriceSeries (differenced at ``tau``), a ReturnSeries, or a
    plain sequence of returns.  Test oracle only.
    """
    if isinstance(series, PriceSeries):
        v = [float(x) for x in series.values]
        r = [v[i + tau] - v[i] for i in range(len(v) - tau)]
    elif isinstance(series, ReturnSeries):
        r = [float(x) for x in series.values]
    else:
        r = [float(x) for x in series]
    if not r:
        raise EmptySeries("no returns to average")
    if not p > 0:
        raise DataError(f"moment order must be positive, got {p}")
    return math.fsum(abs(x) ** p for x in r) / len(r)


def concatenate(parts, label="concatenated") -> PriceSeries:
    """Join series end to start so no jump appears at the seams."""
    chunks = []
    offset = 0.0
    for s in parts:
        v = s.values - s.values[0] + offset
        chunks.append(v)
        offset = v[-1]
    return PriceSeries(np.concatenate(chunks), 0, label)
