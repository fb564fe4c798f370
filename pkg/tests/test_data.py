import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horizon_hedge import data
from horizon_hedge.errors import (DuplicateDate, EmptyIntersection, FrequencyMismatch,
                                  MissingFile, NonPositivePrice, ParseError, SplitOutOfRange,
                                  TooShort)

from conftest import make_pair, make_series, write_csv


def test_load_three_rows(tmp_path):
    f = write_csv(tmp_path / "p.csv", [("2001-01-02", 100), ("2001-01-03", 101), ("2001-01-04", 99)])
    p = data.load_prices(f)
    assert len(p) == 3
    assert p.prices.tolist() == [100.0, 101.0, 99.0]
    assert p.label == "p"


def test_load_zero_price_rejected(tmp_path):
    f = write_csv(tmp_path / "p.csv", [("2001-01-02", 100), ("2001-01-03", 0)])
    with pytest.raises(NonPositivePrice) as exc:
        data.load_prices(f)
    assert exc.value.row == 3


def test_load_sorts_unordered_rows(tmp_path):
    f = write_csv(tmp_path / "p.csv", [("2001-01-04", 99), ("2001-01-02", 100), ("2001-01-03", 101)])
    p = data.load_prices(f)
    assert [str(d) for d in p.dates] == ["2001-01-02", "2001-01-03", "2001-01-04"]
    assert p.prices.tolist() == [100.0, 101.0, 99.0]


def test_load_errors(tmp_path):
    with pytest.raises(MissingFile):
        data.load_prices(tmp_path / "nope.csv")
    bad = write_csv(tmp_path / "bad.csv", [("2001-01-02", 100), ("02/01/2001", 101)])
    with pytest.raises(ParseError) as exc:
        data.load_prices(bad)
    assert exc.value.row == 3
    dup = write_csv(tmp_path / "dup.csv", [("2001-01-02", 100), ("2001-01-02", 101)])
    with pytest.raises(DuplicateDate):
        data.load_prices(dup)
    hdr = write_csv(tmp_path / "hdr.csv", [("2001-01-02", 100)], header="day,close")
    with pytest.raises(ParseError):
        data.load_prices(hdr)


def test_log_returns_values():
    dates = ["2001-01-02", "2001-01-03"]
    assert data.log_returns(data.PriceSeries(dates, [100, 100], "x")).returns[0] == 0.0
    up = data.log_returns(data.PriceSeries(dates, [100, 110], "x")).returns[0]
    down = data.log_returns(data.PriceSeries(dates, [100, 90], "x")).returns[0]
    # high-precision references: ln(1.1), ln(0.9)
    assert up == pytest.approx(0.09531017980432486, abs=1e-15)
    assert down == pytest.approx(-0.10536051565782630, abs=1e-15)
    with pytest.raises(TooShort):
        data.log_returns(data.PriceSeries(dates[:1], [100], "x"))


def test_aggregate_identity_and_sum():
    r = make_series([0.01, -0.02, 0.03, 0.005, -0.001])
    assert data.aggregate(r, 1) is r
    five = data.aggregate(r, 5)
    assert len(five) == 1
    assert five.returns[0] == pytest.approx(0.01 - 0.02 + 0.03 + 0.005 - 0.001, abs=1e-16)
    assert five.dates[0] == r.dates[-1]
    assert five.frequency_h == 5


def test_aggregate_counts_and_leading_discard(rng):
    r = make_series(rng.normal(size=2601))
    five = data.aggregate(r, 5)
    assert len(five) == 520
    assert data.leading_discard(2601, 5) == 1
    # the most recent block is complete and ends on the last date
    assert five.dates[-1] == r.dates[-1]
    assert five.returns[0] == pytest.approx(r.returns[1:6].sum())


def test_aggregate_errors():
    with pytest.raises(TooShort):
        data.aggregate(make_series([0.1, 0.2]), 5)
    with pytest.raises(FrequencyMismatch):
        data.aggregate(make_series([0.1] * 10, h=5), 2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.5, 2.0), min_size=3, max_size=80), st.integers(1, 12))
def test_aggregate_round_trip_with_prices(ratios, h):
    prices = 100 * np.cumprod(np.array([1.0] + ratios))
    dates = np.busday_offset(np.datetime64("2001-01-01"), np.arange(len(prices)), roll="forward")
    p = data.PriceSeries(dates, prices, "x")
    r = data.log_returns(p)
    if len(r) < h:
        return
    agg = data.aggregate(r, h)
    off = data.leading_discard(len(r), h)
    for k in range(len(agg)):
        expect = math.log(prices[off + (k + 1) * h]) - math.log(prices[off + k * h])
        assert agg.returns[k] == pytest.approx(expect, abs=1e-12)
    # sum preservation over the consumed returns
    assert agg.returns.sum() == pytest.approx(r.returns[off:].sum(), abs=1e-12)


def test_align_cases():
    a = make_series([1, 2, 3])
    b = make_series([4, 5, 6])
    pair = data.align(a, b)
    assert np.array_equal(pair.cash.returns, [1, 2, 3])
    extra = data.ReturnSeries(np.concatenate([a.dates, [np.datetime64("2001-02-01")]]),
                              [4, 5, 6, 7], 1)
    pair = data.align(a, extra)
    assert len(pair) == 3 and pair.futures.returns.tolist() == [4, 5, 6]
    # idempotent and symmetric in the date set
    again = data.align(pair.cash, pair.futures)
    assert np.array_equal(again.dates, pair.dates)
    assert np.array_equal(data.align(extra, a).dates, pair.dates)
    disjoint = make_series([1, 2], start="2010-01-01")
    with pytest.raises(EmptyIntersection):
        data.align(a, disjoint)


def test_split_cases(caplog):
    n = 15 * 260
    pair = make_pair(np.zeros(n) + 0.001, np.zeros(n) + 0.001, start="1990-01-01")
    cut_date = pair.dates[10 * 260 - 1]
    s = data.split(pair, cut_date)
    assert len(s.estimation) == 2600 and len(s.holdout) == 1300
    assert s.estimation.dates[-1] <= cut_date < s.holdout.dates[0]
    assert len(s.estimation) + len(s.holdout) == n
    with caplog.at_level("WARNING"):
        last = data.split(pair, pair.dates[-1])
    assert len(last.holdout) == 0 and "empty holdout" in caplog.text
    with pytest.raises(SplitOutOfRange):
        data.split(pair, "1980-01-01")


def test_pair_from_prices_intersects_prices_first():
    d = np.array(["2001-01-01", "2001-01-02", "2001-01-03", "2001-01-04"], dtype="datetime64[D]")
    cash = data.PriceSeries(d, [100, 101, 102, 103], "c")
    fut = data.PriceSeries(d[[0, 1, 3]], [100, 101, 103], "f", role="futures")
    pair = data.pair_from_prices(cash, fut)
    assert len(pair) == 2
    # both legs measure the same two-day move on the last date
    assert pair.cash.returns[-1] == pytest.approx(math.log(103 / 101))
    assert pair.futures.returns[-1] == pytest.approx(math.log(103 / 101))
