"""h0 from the X^inf invariant, C from the scaling exponents, and the full
analysis pipeline.

X^inf(tau), the limit of X_{p+1}/X_p as p grows, is never estimated
directly.  Only ratios X^inf(tau)/X^inf(tau0) are formed, through the
finite-order combination

    F_pq(tau, tau0) = (log2[X_p(tau)/X_p(tau0)] - G log2[X_q(tau)/X_q(tau0)])
                      / (p - q G),        G = (1 - beta^p)/(1 - beta^q),

which equals h0 * log2(tau/tau0) for any (p, q) when
xi(p) = h0 p + C (1 - beta^p).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import AnalysisConfig
from .errors import (AllPairsDegenerate, BetaOutOfRange, DataError,
                     DegenerateDenominator, DegenerateRange, GridMismatch,
                     MonofractalDegenerate, SLHierarchyError, StageError)
from .gess import BetaEstimate, DeltaRhoSequence, build_delta_rho_sequence, estimate_beta
from .ingest import OVERLAP_MODE, PriceSeries, log_prices
from .regression import linear_fit
from .structfn import ScalingFit, StructureFunctionTable, build_table, fit_xi

SCHEMA_VERSION = 1
F_FORMULA = ("F = (log2[Xp(t)/Xp(t0)] - G(p,q) log2[Xq(t)/Xq(t0)]) / (p - q G(p,q)); "
             "log2 applied to the X_q ratio")
F_DENOM_TOL = 1e-9


def gamma(beta, p, q):
    """(1 - beta^p) / (1 - beta^q)."""
    return (1.0 - beta ** p) / (1.0 - beta ** q)


def _check_beta(beta):
    if not 0.0 < beta < 1.0:
        raise BetaOutOfRange(f"beta={beta!r} outside (0, 1)")


def f_pq(table: StructureFunctionTable, beta, p, q, tau, tau0=64) -> float:
    _check_beta(beta)
    g = gamma(beta, p, q)
    denom = p - q * g
    if abs(denom) < F_DENOM_TOL:
        raise DegenerateDenominator(f"p - q*Gamma vanishes for p={p:g}, q={q:g}")
    if int(tau) == int(tau0):
        table.moment(p, tau)   # still validates grid membership
        table.moment(q, tau)
        return 0.0
    lp = table.log_moments(p, (tau, tau0))
    lq = table.log_moments(q, (tau, tau0))
    ln2 = math.log(2.0)
    return ((lp[0] - lp[1]) / ln2 - g * (lq[0] - lq[1]) / ln2) / denom


@dataclass(frozen=True)
class FlatnessReport:
    f_values: np.ndarray     # [p index, q index, tau index], NaN where undefined
    p_set: tuple
    q_set: tuple
    taus: tuple
    tau0: int
    threshold: float
    max_abs_f: float
    flat: bool
    tau_range: tuple
    beta: float

    def mean_f(self) -> np.ndarray:
        """F averaged over every defined (p, q) pair, per tau."""
        flat = self.f_values.reshape(-1, len(self.taus))
        ok = ~np.isnan(flat).any(axis=1)
        return flat[ok].mean(axis=0)

    def rows(self):
        for i, p in enumerate(self.p_set):
            for j, q in enumerate(self.q_set):
                for k, t in enumerate(self.taus):
                    v = self.f_values[i, j, k]
                    if not np.isnan(v):
                        yield p, q, t, float(v)

    def to_dict(self):
        return {"tau0": self.tau0, "threshold": self.threshold,
                "max_abs_f": self.max_abs_f, "flat": self.flat,
                "tau_range": list(self.tau_range), "taus": list(self.taus),
                "p_set": list(self.p_set), "q_set": list(self.q_set),
                "beta_used": self.beta}


def flatness_report(table, beta, p_set, q_set, tau_range=(2, 128), tau0=64,
                    threshold=0.05) -> FlatnessReport:
    if not p_set or not q_set:
        raise ValueError("p_set and q_set must both be non-empty")
    _check_beta(beta)
    taus = tuple(table.grid.taus_in(tau_range))
    if tau0 not in taus:
        raise GridMismatch(f"tau0={tau0} is not a grid lag inside {tuple(tau_range)}")
    out = np.full((len(p_set), len(q_set), len(taus)), np.nan)
    any_ok = False
    for i, p in enumerate(p_set):
        for j, q in enumerate(q_set):
            if abs(p - q) <= 1e-12:
                continue
            try:
                out[i, j] = [f_pq(table, beta, p, q, t, tau0) for t in taus]
            except DegenerateDenominator:
                continue
            any_ok = True
    if not any_ok:
        raise AllPairsDegenerate("every (p, q) pair has p - q*Gamma = 0")
    max_abs = float(np.nanmax(np.abs(out)))
    return FlatnessReport(out, tuple(p_set), tuple(q_set), taus, int(tau0),
                          float(threshold), max_abs, max_abs <= threshold,
                          (taus[0], taus[-1]), float(beta))


def estimate_h0(flatness: FlatnessReport) -> float:
    """Slope of the (p, q)-averaged F against log2 tau."""
    if len(flatness.taus) < 3:
        raise DegenerateRange(f"{len(flatness.taus)} lags in flatness report, need 3")
    x = np.log2(np.array(flatness.taus, dtype=np.float64))
    return linear_fit(x, flatness.mean_f()).slope


def estimate_C(xi_fit: ScalingFit, beta, h0=0.0, p_range=(1.0, 4.0)):
    """Mean and population std of (xi(p) - h0 p) / (1 - beta^p) over p_range."""
    _check_beta(beta)
    lo, hi = p_range
    vals = [(x - h0 * p) / (1.0 - beta ** p)
            for p, x in zip(xi_fit.p_grid, xi_fit.xi)
            if lo - 1e-9 <= p <= hi + 1e-9]
    if not vals:
        raise DataError(f"no fitted p inside {tuple(p_range)}")
    v = np.array(vals)
    return float(v.mean()), float(v.std())


@dataclass(frozen=True)
class HierarchyEstimate:
    label: str
    beta: BetaEstimate
    xi_fit: ScalingFit
    scatter: DeltaRhoSequence
    h0: float | None
    C: float | None
    C_spread: float | None
    C_raw: float | None          # computed even when flatness fails
    C_raw_spread: float | None
    flatness: FlatnessReport | None
    provenance: dict
    stage_failures: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def complete(self):
        return not self.stage_failures

    def to_dict(self):
        fl = self.flatness
        return {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "beta": self.beta.to_dict(),
            "h0": self.h0,
            "C": self.C,
            "C_spread": self.C_spread,
            "C_raw": self.C_raw,
            "C_raw_spread": self.C_raw_spread,
            "flatness": fl.to_dict() if fl is not None else None,
            "xi_fit": self.xi_fit.to_dict(),
            "scatter": self.scatter.to_dict(),
            "stage_failures": dict(self.stage_failures),
            "notes": dict(self.notes),
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def summary_row(self) -> dict:
        fl = self.flatness
        return {
            "label": self.label,
            "beta": self.beta.beta,
            "beta_stderr": self.beta.stderr_beta,
            "h0": self.h0,
            "C": self.C,
            "C_spread": self.C_spread,
            "flat": None if fl is None else fl.flat,
            "max_abs_f": None if fl is None else fl.max_abs_f,
            "config_hash": self.provenance.get("config_hash", ""),
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except SLHierarchyError as exc:
        raise StageError(name, exc) from exc


def _provenance(series, config):
    cfg = config.to_dict()
    cfg.pop("workers")
    return {
        "package_version": __version__,
        "config": cfg,
        "config_hash": config.config_hash(),
        "input_sha256": series.content_hash(),
        "input_length": len(series),
        "overlap_mode": OVERLAP_MODE,
        "f_formula": F_FORMULA,
    }


def _pipeline(series: PriceSeries, config: AnalysisConfig, tolerant: bool) -> HierarchyEstimate:
    config.validate()
    work = _stage("ingest", log_prices, series) if config.log_prices else series
    table = _stage("structfn", build_table, work, config.grid, config.workers)
    xi = _stage("structfn", fit_xi, table, config.fit_tau_range)
    seq = _stage("gess", build_delta_rho_sequence, table, config.n, config.q,
                 config.rho_p_range[0], config.rho_p_range[1], config.delta_p,
                 config.fit_tau_range, config.monofractal_trend)
    beta = _stage("gess", estimate_beta, seq)
    if beta.degenerate:
        raise StageError("gess", MonofractalDegenerate(
            f"Delta-rho slope {beta.slope:.6g} >= 1: beta = {beta.beta:.6g} is at or "
            "beyond the monofractal boundary", beta, xi))

    failures = {}
    flat = h0 = c_raw = c_raw_sd = None
    try:
        flat = _stage("flatness", flatness_report, table, beta.beta, config.flat_p_set,
                      config.flat_q_set, config.fit_tau_range, config.tau0,
                      config.flat_threshold)
        h0 = _stage("h0", estimate_h0, flat)
        c_raw, c_raw_sd = _stage("C", estimate_C, xi, beta.beta, h0, config.c_p_range)
    except StageError as exc:
        if not tolerant:
            raise
        failures[exc.stage] = str(exc)
    C = C_sd = None
    notes = {}
    if flat is not None and c_raw is not None:
        if flat.flat:
            C, C_sd = c_raw, c_raw_sd
        else:
            notes["C"] = ("not estimated: F is not flat over the tau range "
                                     f"(max |F| = {flat.max_abs_f:.4g} > {flat.threshold:g})")
    return HierarchyEstimate(series.label, beta, xi, seq, h0, C, C_sd, c_raw, c_raw_sd,
                             flat, _provenance(series, config), failures, notes)


def analyze(series: PriceSeries, config: AnalysisConfig | None = None) -> HierarchyEstimate:
    """Run structure functions -> xi fit -> Delta-rho -> beta -> flatness -> h0 -> C.

    Stage failures raise StageError.  A non-flat F is a verdict, not an
    error: C is then left unset and the reason recorded in ``notes``.
    """
    return _pipeline(series, config or AnalysisConfig(), tolerant=False)


@dataclass(frozen=True)
class WindowResult:
    window: tuple
    estimate: HierarchyEstimate | None = None
    error: StageError | None = None

    @property
    def ok(self):
        return self.estimate is not None and self.estimate.complete


def equal_windows(length, count):
    edges = [round(i * length / count) for i in range(count + 1)]
    return [(edges[i], edges[i + 1]) for i in range(count)]


def windowed_analyze(series: PriceSeries, windows, config: AnalysisConfig | None = None):
    """Analyze each (start, stop) window independently.

    Errors stay inside their window.  Once beta is known, failures in the
    flatness, h0 or C stages are recorded on the estimate rather than
    discarding the window.
    """
    config = (config or AnalysisConfig()).validate()
    out = []
    for start, stop in windows:
        w = (int(start), int(stop))
        try:
            if not 0 <= w[0] < w[1] <= len(series):
                raise StageError("ingest", DataError(f"window {w} outside [0, {len(series)}]"))
            sub = series if w == (0, len(series)) else series.window(*w)
            out.append(WindowResult(w, _pipeline(sub, config, tolerant=True)))
        except StageError as exc:
            out.append(WindowResult(w, error=exc))
        except SLHierarchyError as exc:
            out.append(WindowResult(w, error=StageError("ingest", exc)))
    return out
