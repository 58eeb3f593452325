import io
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levscan.market_data import (
    DataError,
    FredParseError,
    MarketDataset,
    RawSeries,
    build_dataset,
    dataset_from_prices,
    longest_excess_run,
    parse_fred_csv,
)

D = date(1955, 8, 4)


def series(sid, values, start=D):
    return RawSeries(sid, tuple((start + timedelta(days=i), v) for i, v in enumerate(values)))


class TestParse:
    def test_missing_marker(self):
        s = parse_fred_csv("DATE,VALUE\n1955-08-04,43.69\n1955-08-05,.\n", "SP500")
        assert s.series_id == "SP500"
        assert s.observations == ((date(1955, 8, 4), 43.69), (date(1955, 8, 5), None))

    def test_empty_body(self):
        assert len(parse_fred_csv("DATE,VALUE\n", "X")) == 0

    def test_bad_value_names_line(self):
        with pytest.raises(FredParseError, match="line 3") as err:
            parse_fred_csv("DATE,VALUE\n1955-08-04,43.69\n1955-08-05,abc\n", "SP500")
        assert err.value.line == 3

    def test_bad_date(self):
        with pytest.raises(FredParseError, match="line 2"):
            parse_fred_csv("DATE,VALUE\n08/04/1955,1\n")

    def test_non_increasing(self):
        with pytest.raises(FredParseError, match="line 3"):
            parse_fred_csv("DATE,VALUE\n1955-08-05,1\n1955-08-05,2\n")

    def test_observation_date_header_names_series(self):
        s = parse_fred_csv(io.StringIO("observation_date,DFF\n1954-07-01,1.13\n"))
        assert s.series_id == "DFF"
        assert s.values == [1.13]

    def test_bad_header(self):
        with pytest.raises(FredParseError, match="line 1"):
            parse_fred_csv("foo,bar,baz\n")

    def test_raw_series_roundtrip(self):
        s = series("X", [1.5, None, 2.25])
        assert parse_fred_csv(s.to_csv(), "X") == s


class TestBuild:
    def test_gap_is_non_trading(self):
        ds = build_dataset(
            series("P", [100.0, None, 102.0]),
            series("DEP", [5.0]),
            series("BOR", [8.0]),
        )
        assert len(ds) == 3
        assert list(ds.is_trading_day) == [False, False, True]
        assert ds.market_return[1] == 0.0
        assert ds.market_return[2] == pytest.approx(0.02, rel=1e-14)

    def test_rate_carry_forward_and_percent(self):
        ds = build_dataset(series("P", [100.0, 101.0, 99.0, 100.0]), series("DEP", [5.0]), series("BOR", [8.0, None, 9.0]))
        np.testing.assert_array_equal(ds.deposit_rate, [0.05] * 4)
        np.testing.assert_array_equal(ds.borrow_rate, [0.08, 0.08, 0.09, 0.09])
        assert ds.deposit_accrual[0] == 0.05 / 365

    def test_leading_rate_gap(self):
        price = series("P", [100.0, 101.0, 102.0])
        late = series("BOR", [8.0], start=D + timedelta(days=2))
        with pytest.raises(DataError, match="BOR"):
            build_dataset(price, series("DEP", [5.0]), late)
        ds = build_dataset(price, series("DEP", [5.0]), late, backfill_rates=True)
        assert ds.borrow_rate[0] == 0.08

    def test_previous_price_before_start(self):
        ds = build_dataset(series("P", [100.0, 110.0, 121.0]), series("DEP", [0.0]), series("BOR", [0.0]), start=D + timedelta(days=1))
        assert ds.is_trading_day[0]
        assert ds.market_return[0] == pytest.approx(0.1)

    def test_no_prices(self):
        with pytest.raises(DataError):
            build_dataset(series("P", [None, None]), series("DEP", [5.0]), series("BOR", [8.0]))

    def test_day_count_for_studied_period(self):
        # inclusive count, computed independently from year lengths
        n = sum(366 if y % 4 == 0 else 365 for y in range(1956, 2010)) + 150 + 321
        assert n == 20195
        start, end = date(1955, 8, 4), date(2010, 11, 17)
        price = RawSeries("P", ((start, 40.0), (end, 1200.0)))
        ds = build_dataset(price, RawSeries("D", ((start, 1.0),)), RawSeries("B", ((start, 3.0),)))
        assert len(ds) == n

    def test_day_count_360(self):
        ds = build_dataset(series("P", [1.0, 2.0]), series("DEP", [3.6]), series("BOR", [7.2]), day_count=360)
        assert ds.deposit_accrual[0] == pytest.approx(0.036 / 360)

    def test_immutable(self):
        ds = dataset_from_prices([1.0, 1.1], 0.01)
        with pytest.raises(ValueError):
            ds.market_return[0] = 1.0

    def test_invariant_checks(self):
        cal = np.arange(np.datetime64("2000-01-01"), np.datetime64("2000-01-03"))
        with pytest.raises(DataError, match="non-trading"):
            MarketDataset(cal, [0.0, 0.1], [0, 0], [0, 0], [False, False])
        with pytest.raises(DataError):
            MarketDataset(cal, [0.0, -1.0], [0, 0], [0, 0], [False, True])


price_lists = st.lists(
    st.one_of(st.none(), st.floats(min_value=1.0, max_value=1e4, allow_nan=False)), min_size=2, max_size=60
).filter(lambda v: sum(x is not None for x in v) >= 2)


@settings(max_examples=60, deadline=None)
@given(price_lists, st.lists(st.floats(min_value=0, max_value=20), min_size=1, max_size=5))
def test_properties(prices, rates):
    present = [p for p in prices if p is not None]
    first = prices.index(present[0])
    # starting at the first present price
    ds = build_dataset(series("P", prices), series("DEP", rates), series("BOR", rates), start=D + timedelta(days=first))
    assert int(ds.is_trading_day.sum()) == len(present) - 1
    assert np.all(ds.market_return[~ds.is_trading_day] == 0.0)
    growth = np.prod(1.0 + ds.market_return[ds.is_trading_day])
    assert growth == pytest.approx(present[-1] / present[0], rel=1e-10)
    # round trip through the canonical CSV is bit-exact
    assert MarketDataset.from_csv(ds.to_csv()) == ds


class TestRuns:
    def _ds(self, excess, rate=0.0365):
        acc = rate / 365
        r = [0.0] + [acc + e for e in excess]
        prices = np.cumprod([100.0] + [1 + x for x in r[1:]])
        return dataset_from_prices(prices, rate)

    def test_alternating(self):
        ds = self._ds([0.01, -0.01] * 5)
        assert longest_excess_run(ds, "up")[0] == 1
        assert longest_excess_run(ds, "down")[0] == 1

    def test_ties_and_all_occurrences(self):
        ds = self._ds([0.01, 0.01, -0.01, 0.01, 0.01, -0.01, -0.01, -0.01])
        n, spans = longest_excess_run(ds, "up")
        assert n == 2 and len(spans) == 2
        assert spans[0] == (ds.day(1), ds.day(2))
        n, spans = longest_excess_run(ds, "down")
        assert n == 3 and spans == [(ds.day(6), ds.day(8))]

    def test_non_trading_days_do_not_break_runs(self):
        days = [D + timedelta(days=i) for i in range(6)]
        price = RawSeries("P", ((days[0], 100.0), (days[1], 101.0), (days[4], 102.0), (days[5], 103.0)))
        ds = build_dataset(price, series("DEP", [0.0]), series("BOR", [0.0]))
        n, spans = longest_excess_run(ds, "up")
        assert n == 3 and spans == [(days[1], days[5])]

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            longest_excess_run(self._ds([0.01]), "sideways")
