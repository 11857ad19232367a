import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slhierarchy.errors import (DegenerateDenominator, DegenerateRange, DegenerateSlope,
                                InsufficientPoints, MonofractalDegenerate)
from slhierarchy.gess import (DeltaRhoSequence, aligned_p_values, build_delta_rho_sequence,
                              estimate_beta, estimate_rho, monofractal_check,
                              theoretical_delta_rho_next, theoretical_rho)
from slhierarchy.ingest import PriceSeries
from slhierarchy.structfn import build_table
from slhierarchy.synth import CascadeSpec, analytic_table, generate_cascade, power_law_table

BETAS = (0.3, 0.5, 0.7, 0.9)
NS = (1.6, 1.8, 2.0, 2.2, 2.4)
QS = (0.6, 0.8, 1.0, 1.2, 1.4)
PS = [round(0.2 * k, 10) for k in range(1, 26)]


def _rho_oracle(beta, n, p, q):
    # written out independently of the package
    num = n * (1 - beta ** p) - p * (1 - beta ** n)
    den = n * (1 - beta ** q) - q * (1 - beta ** n)
    return num / den


def test_rho_worked_example():
    assert theoretical_rho(0.5, 2, 3, 1) == pytest.approx(-2.0, abs=1e-15)


@given(st.floats(0.05, 0.95), st.sampled_from(NS), st.sampled_from(QS), st.floats(0.1, 6))
def test_rho_identities(beta, n, q, p):
    assert theoretical_rho(beta, n, q, q) == pytest.approx(1.0, abs=1e-12)
    assert theoretical_rho(beta, n, n, q) == pytest.approx(0.0, abs=1e-12)
    assert theoretical_rho(beta, n, p, q) == pytest.approx(_rho_oracle(beta, n, p, q), rel=1e-12, abs=1e-12)


def test_rho_denominator_guard():
    with pytest.raises(DegenerateDenominator):
        theoretical_rho(0.5, 2.0, 1.0, 2.0)


def test_recursion_matches_rho_differences():
    worst = 0.0
    for beta, n, q in itertools.product(BETAS, NS, QS):
        if n == q:
            continue
        rho = [theoretical_rho(beta, n, p, q) for p in PS]
        d = np.diff(rho)
        for a, b in zip(d, d[1:]):
            worst = max(worst, abs(theoretical_delta_rho_next(beta, n, q, 0.2, a) - b))
    assert worst <= 1e-12


def test_recursion_limits():
    assert theoretical_delta_rho_next(0.6, 2, 1, 0.0, 0.37) == pytest.approx(0.37, abs=1e-15)
    # slope of the affine map is beta**dp, which tends to 1 as beta -> 1
    gaps = []
    for b in (0.9, 0.99, 0.999, 0.9999):
        f0 = theoretical_delta_rho_next(b, 2, 1, 0.2, 0.0)
        f1 = theoretical_delta_rho_next(b, 2, 1, 0.2, 1.0)
        assert f1 - f0 == pytest.approx(b ** 0.2, abs=1e-9)
        gaps.append(1 - (f1 - f0))
    assert gaps == sorted(gaps, reverse=True) and gaps[-1] < 3e-5


def _exact_pairs(beta, n=2.0, q=1.0, dp=0.2, p_start=0.2, count=20):
    ps = [round(p_start + i * dp, 10) for i in range(count + 2)]
    rho = [_rho_oracle(beta, n, p, q) for p in ps]
    d = np.diff(rho)
    return DeltaRhoSequence(n, q, dp, p_start, tuple(ps[:count]),
                            tuple((float(a), float(b)) for a, b in zip(d, d[1:])))


def test_beta_from_exact_recursion_pairs():
    est = estimate_beta(_exact_pairs(0.7))
    assert est.beta == pytest.approx(0.7, abs=1e-10)
    assert not est.degenerate
    assert est.intercept_discrepancy == pytest.approx(0.0, abs=1e-10)
    assert est.r2 == pytest.approx(1.0)


def test_unit_slope_is_flagged():
    pairs = tuple((x, x + 0.1) for x in (0.0, 1.0, 2.0, 3.0))
    est = estimate_beta(DeltaRhoSequence(2.0, 1.0, 0.2, 0.2, (0.2, 0.4, 0.6, 0.8), pairs))
    assert est.beta == pytest.approx(1.0, abs=1e-12)
    assert est.degenerate


def test_negative_slope_raises():
    pairs = tuple((x, -x) for x in (0.0, 1.0, 2.0, 3.0))
    with pytest.raises(DegenerateSlope):
        estimate_beta(DeltaRhoSequence(2.0, 1.0, 0.2, 0.2, (0.2, 0.4, 0.6, 0.8), pairs))


def test_monofractal_table_is_degenerate():
    table = power_law_table(lambda p: 0.5 * p)
    with pytest.raises(DegenerateRange):
        estimate_rho(table, 2.0, 3.0, 1.0)
    with pytest.raises(MonofractalDegenerate):
        build_delta_rho_sequence(table)


def test_rho_identity_on_table():
    table = analytic_table(0.6, 1.0, 0.0)
    est = estimate_rho(table, 2.0, 1.0, 1.0)
    assert est.rho == 1.0


def test_rho_on_exact_table_matches_theory():
    table = analytic_table(0.6, 1.5, 0.0)
    for p in (0.4, 1.4, 3.0, 5.0):
        assert estimate_rho(table, 2.0, p, 1.0).rho == pytest.approx(_rho_oracle(0.6, 2.0, p, 1.0), abs=1e-10)


def test_too_few_points():
    table = analytic_table(0.6, 1.0, 0.0)
    with pytest.raises(InsufficientPoints):
        build_delta_rho_sequence(table, p_start=0.2, p_end=0.8)
    assert len(build_delta_rho_sequence(table, p_start=0.2, p_end=1.0).pairs) == 3


def test_aligned_p_values():
    assert aligned_p_values(0.2, 1.0, 0.2) == [0.2, 0.4, 0.6, 0.8, 1.0]


def test_sequence_serialization():
    seq = build_delta_rho_sequence(analytic_table(0.6, 1.0, 0.0))
    assert len(seq.pairs) == 23
    lines = seq.to_csv().splitlines()
    assert lines[0] == "p,delta_rho,delta_rho_next" and len(lines) == 24
    assert len(seq.to_dict()["pairs"]) == 23


def test_exact_table_beta_is_insensitive_to_n_q():
    for beta in BETAS:
        table = analytic_table(beta, 1.0, 0.0)
        est = []
        for n, q in itertools.product(NS, QS):
            if n == q:
                continue
            est.append(estimate_beta(build_delta_rho_sequence(table, n, q)).beta)
        assert max(est) - min(est) <= 1e-8
        assert np.mean(est) == pytest.approx(beta, abs=1e-8)


def test_exact_scatter_is_collinear():
    seq = build_delta_rho_sequence(analytic_table(0.5, 1.0, 0.0))
    a, b = np.array(seq.pairs).T
    coef = np.polyfit(a, b, 1)
    rss = float(np.sum((b - np.polyval(coef, a)) ** 2))
    assert rss <= 1e-20 * max(float(np.sum((b - b.mean()) ** 2)), 1.0)


def test_monofractal_check_threshold_is_configurable():
    table = analytic_table(0.99, 1.0, 0.0)      # relative trend (1 - beta)/2 = 0.005
    with pytest.raises(MonofractalDegenerate):
        monofractal_check(table, 2.0, 1.0)
    assert monofractal_check(table, 2.0, 1.0, min_trend=0.0) != 0.0


def test_scale_invariance_of_rho_and_beta():
    s = generate_cascade(CascadeSpec(0.6, 1.0, 0.0, 14, 5)).series
    scaled = PriceSeries(s.values * 37.5)
    a = build_delta_rho_sequence(build_table(s))
    b = build_delta_rho_sequence(build_table(scaled))
    for x, y in zip(a.rho, b.rho):
        assert x.rho == pytest.approx(y.rho, abs=1e-10)
    assert estimate_beta(a).beta == pytest.approx(estimate_beta(b).beta, abs=1e-10)
