"""Generalized extended self-similarity and the Delta-rho estimator of beta.

Structure functions normalized by a reference order n scale as powers of
one another.  Under the She-Leveque hierarchy the relative exponent
rho_n(p, q) is a closed function of beta alone, and its first differences
in p obey an affine recursion whose slope is beta**delta_p.  Fitting that
slope on measured rho values gives beta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateDenominator, DegenerateRange, DegenerateSlope,
                     InsufficientPoints, MonofractalDegenerate)
from .regression import linear_fit
from .structfn import StructureFunctionTable

DENOM_TOL = 1e-12
# Abscissa spread (relative to the spread of ln X_q) below which the GESS
# regression is treated as collapsed.
MONOFRACTAL_SPREAD = 1e-6
# Trend of the abscissa in ln tau relative to the trend of ln X_q, i.e.
# (xi(q) - q xi(n)/n) / xi(q).  Below this the rho regressions fit noise
# against noise.  For h0 = 0 and (n, q) = (2, 1) the ratio is (1 - beta)/2,
# so 0.01 corresponds to beta >= 0.98.
MONOFRACTAL_TREND = 0.01


def _denominator(beta, n, q):
    return n * (1.0 - beta ** q) - q * (1.0 - beta ** n)


def _checked_denominator(beta, n, q):
    d = _denominator(beta, n, q)
    if q == n or abs(d) < DENOM_TOL:
        raise DegenerateDenominator(f"n(1-b^q) - q(1-b^n) vanishes for beta={beta}, n={n}, q={q}")
    return d


def theoretical_rho(beta, n, p, q):
    d = _checked_denominator(beta, n, q)
    return (n * (1.0 - beta ** p) - p * (1.0 - beta ** n)) / d


def theoretical_delta_rho_next(beta, n, q, delta_p, delta_rho_current):
    """Advance Delta-rho by one step of size delta_p along the affine map."""
    d = _checked_denominator(beta, n, q)
    bd = beta ** delta_p
    return bd * delta_rho_current - delta_p * (1.0 - beta ** n) * (1.0 - bd) / d


@dataclass(frozen=True)
class RhoEstimate:
    n: float
    q: float
    p: float
    rho: float
    stderr: float
    r2: float


def _gess_axes(table, n, p, q, tau_range):
    taus = table.grid.taus_in(tau_range)
    if len(taus) < 3:
        raise DegenerateRange(f"tau range {tuple(tau_range)} holds {len(taus)} grid points, need 3")
    ln_n = table.log_moments(n, taus)
    ln_q = table.log_moments(q, taus)
    ln_p = table.log_moments(p, taus)
    x = ln_q - (q / n) * ln_n
    y = ln_p - (p / n) * ln_n
    return x, y, ln_q


def monofractal_check(table, n, q, tau_range=(2, 128), min_trend=MONOFRACTAL_TREND):
    """Raise MonofractalDegenerate if X_q / X_n^(q/n) does not move with tau."""
    x, _, ln_q = _gess_axes(table, n, q, q, tau_range)
    if np.ptp(x) <= MONOFRACTAL_SPREAD * max(np.ptp(ln_q), 1e-300):
        raise MonofractalDegenerate(
            f"normalized structure function X_{q:g}/X_{n:g}^(q/n) is constant over tau; "
            "no multifractal signal")
    taus = np.log(np.array(table.grid.taus_in(tau_range), dtype=np.float64))
    trend = linear_fit(taus, x).slope
    base = linear_fit(taus, ln_q).slope
    if min_trend > 0 and abs(trend) <= min_trend * abs(base):
        raise MonofractalDegenerate(
            f"relative GESS trend {abs(trend / base) if base else 0.0:.3g} <= {min_trend:g}: "
            "scaling is indistinguishable from monofractal")
    return trend


def estimate_rho(table: StructureFunctionTable, n, p, q, tau_range=(2, 128),
                 min_trend=MONOFRACTAL_TREND) -> RhoEstimate:
    x, y, _ = _gess_axes(table, n, p, q, tau_range)
    monofractal_check(table, n, q, tau_range, min_trend)
    if abs(p - q) <= 1e-12:
        return RhoEstimate(n, q, p, 1.0, 0.0, 1.0)
    f = linear_fit(x, y)
    return RhoEstimate(n, q, p, f.slope, f.stderr, f.r2)


@dataclass(frozen=True)
class DeltaRhoSequence:
    n: float
    q: float
    delta_p: float
    p_start: float
    p_values: tuple      # p at which each pair's first coordinate is taken
    pairs: tuple         # (delta_rho(p), delta_rho(p + delta_p))
    rho: tuple = field(default=())   # RhoEstimate at every aligned p

    def to_dict(self):
        return {
            "n": self.n, "q": self.q, "delta_p": self.delta_p, "p_start": self.p_start,
            "pairs": [{"p": p, "delta_rho": a, "delta_rho_next": b}
                      for p, (a, b) in zip(self.p_values, self.pairs)],
        }

    def to_csv(self) -> str:
        lines = ["p,delta_rho,delta_rho_next"]
        lines += [f"{p!r},{a!r},{b!r}" for p, (a, b) in zip(self.p_values, self.pairs)]
        return "\n".join(lines) + "\n"


def aligned_p_values(p_start, p_end, delta_p):
    k = int(math.floor((p_end - p_start) / delta_p + 1e-9))
    return [round(p_start + i * delta_p, 10) for i in range(k + 1)]


def build_delta_rho_sequence(table, n=2.0, q=1.0, p_start=0.2, p_end=5.0,
                             delta_p=0.2, tau_range=(2, 128),
                             min_trend=MONOFRACTAL_TREND) -> DeltaRhoSequence:
    """Estimate rho at p_start, p_start + delta_p, ..., p_end and pair up
    consecutive differences."""
    ps = aligned_p_values(p_start, p_end, delta_p)
    if len(ps) - 2 < 3:
        raise InsufficientPoints(
            f"p range [{p_start:g}, {p_end:g}] at step {delta_p:g} gives {max(len(ps) - 2, 0)} pairs, need 3")
    monofractal_check(table, n, q, tau_range, min_trend)
    rhos = tuple(estimate_rho(table, n, p, q, tau_range, min_trend=0.0) for p in ps)
    d = [b.rho - a.rho for a, b in zip(rhos, rhos[1:])]
    pairs = tuple((d[i], d[i + 1]) for i in range(len(d) - 1))
    return DeltaRhoSequence(float(n), float(q), float(delta_p), float(p_start),
                            tuple(ps[:len(pairs)]), pairs, rhos)


@dataclass(frozen=True)
class BetaEstimate:
    slope: float
    intercept: float
    beta: float
    stderr_beta: float
    n: float
    q: float
    delta_p: float
    r2: float
    slope_stderr: float = 0.0
    degenerate: bool = False
    predicted_intercept: float | None = None
    intercept_discrepancy: float | None = None

    def to_dict(self):
        return dict(self.__dict__)


def estimate_beta(sequence: DeltaRhoSequence) -> BetaEstimate:
    """beta = slope**(1/delta_p) from an OLS line through the Delta-rho scatter.

    A slope of exactly 1 or above marks the monofractal boundary and the
    estimate is flagged degenerate; a non-positive slope means beta does
    not exist and DegenerateSlope is raised.
    """
    if len(sequence.pairs) < 3:
        raise InsufficientPoints(f"{len(sequence.pairs)} pairs, need 3")
    a = np.array([x for x, _ in sequence.pairs])
    b = np.array([y for _, y in sequence.pairs])
    f = linear_fit(a, b)
    s, dp = f.slope, sequence.delta_p
    if s <= 0:
        raise DegenerateSlope(f"Delta-rho scatter slope {s:.6g} <= 0; no SL hierarchy")
    beta = s ** (1.0 / dp)
    stderr_beta = abs(beta / (dp * s)) * f.stderr
    degenerate = not (0.0 < s < 1.0)
    pred = disc = None
    if not degenerate:
        try:
            pred = -dp * (1.0 - beta ** sequence.n) * (1.0 - s) / _checked_denominator(
                beta, sequence.n, sequence.q)
            disc = f.intercept - pred
        except DegenerateDenominator:
            pass
    return BetaEstimate(s, f.intercept, beta, stderr_beta, sequence.n, sequence.q,
                        dp, f.r2, f.stderr, degenerate, pred, disc)
