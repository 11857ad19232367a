import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slhierarchy.errors import DataError, ParseError, TauOutOfRange, TooShort
from slhierarchy.ingest import (PriceSeries, compute_returns, load_price_series,
                                log_prices, write_price_series)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def _write(tmp_path, text, name="s.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_single_column(tmp_path):
    s = load_price_series(_write(tmp_path, "1.0\n2.0\n3.5"))
    assert s.values.tolist() == [1.0, 2.0, 3.5]
    assert s.start_index == 0


def test_load_named_column(tmp_path):
    path = _write(tmp_path, "date,close\n2000-01-04,100.5\n2000-01-05,101.0\n")
    assert load_price_series(path, "close").values.tolist() == [100.5, 101.0]


def test_load_index_column_skips_header(tmp_path):
    path = _write(tmp_path, "date,close\n2000-01-04,100.5\n2000-01-05,101.0\n")
    assert load_price_series(path, 1).values.tolist() == [100.5, 101.0]


def test_load_tab_delimited(tmp_path):
    path = _write(tmp_path, "a\tb\n1\t10\n2\t20\n3\t30\n")
    assert load_price_series(path, "b").values.tolist() == [10.0, 20.0, 30.0]


def test_parse_error_reports_row(tmp_path):
    path = _write(tmp_path, "1.0\n2.0\nabc\n4.0\n")
    with pytest.raises(ParseError) as info:
        load_price_series(path)
    assert info.value.row == 3


@pytest.mark.parametrize("text", ["1.0\n\n3.0\n", "1,2\n3\n4,5\n", "1\nnan\n2\n", "1\ninf\n2\n"])
def test_malformed_rows_are_rejected(tmp_path, text):
    with pytest.raises(ParseError):
        load_price_series(_write(tmp_path, text), -1 if "," in text else 0)


def test_too_short(tmp_path):
    with pytest.raises(TooShort):
        load_price_series(_write(tmp_path, "close\n1.0\n"), "close")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_price_series(tmp_path / "nope.csv")


def test_unknown_column_name(tmp_path):
    with pytest.raises(DataError):
        load_price_series(_write(tmp_path, "a,b\n1,2\n3,4\n"), "c")


@pytest.mark.parametrize("tau,expected", [(1, [2, 3, 4]), (2, [5, 7]), (3, [9])])
def test_compute_returns_examples(tau, expected):
    r = compute_returns(PriceSeries([1.0, 3.0, 6.0, 10.0]), tau)
    assert r.values.tolist() == expected
    assert r.tau == tau


def test_constant_series_has_zero_returns():
    assert compute_returns(PriceSeries([5.0] * 4), 1).values.tolist() == [0.0, 0.0, 0.0]


@pytest.mark.parametrize("tau", [0, 4, -1])
def test_tau_out_of_range(tau):
    with pytest.raises(TauOutOfRange):
        compute_returns(PriceSeries([1.0, 3.0, 6.0, 10.0]), tau)


@pytest.mark.parametrize("values", [[1.0], [1.0, float("nan")], [[1.0, 2.0]]])
def test_price_series_invariants(values):
    with pytest.raises(DataError):
        PriceSeries(values)


def test_price_series_is_read_only():
    s = PriceSeries([1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 3.0


def test_window_relabels_and_slices():
    s = PriceSeries([1.0, 2.0, 3.0, 4.0], label="x")
    w = s.window(1, 3)
    assert w.values.tolist() == [2.0, 3.0]
    assert w.label == "x[1:3]"


def test_log_prices_rejects_nonpositive():
    assert np.allclose(log_prices(PriceSeries([1.0, math.e])).values, [0.0, 1.0])
    with pytest.raises(DataError):
        log_prices(PriceSeries([1.0, 0.0]))


@given(st.lists(st.integers(-2**40, 2**40), min_size=2, max_size=200))
def test_first_differences_telescope(values):
    # integer-valued samples keep every difference and partial sum exact
    s = PriceSeries([float(v) for v in values])
    r = compute_returns(s, 1)
    assert math.fsum(r.values) == values[-1] - values[0]
    assert len(r) == len(values) - 1


@given(st.lists(finite, min_size=2, max_size=100), st.data())
def test_returns_are_exact_differences(values, data):
    tau = data.draw(st.integers(1, len(values) - 1))
    r = compute_returns(PriceSeries(values), tau)
    assert len(r) == len(values) - tau
    assert r.values.tolist() == [values[i + tau] - values[i] for i in range(len(values) - tau)]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=2, max_size=50))
def test_csv_round_trip_is_bit_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    s = PriceSeries(values)
    write_price_series(s, path)
    back = load_price_series(path, "value")
    assert back.values.tobytes() == s.values.tobytes()
