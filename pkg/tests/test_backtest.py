import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levscan.backtest import (
    SIM1,
    SIM2,
    SIM3,
    SIM4,
    RegimeConfig,
    growth_curve,
    regime_preset,
    run_backtest,
)
from levscan.market_data import dataset_from_prices

REGIMES = [SIM1, SIM2, SIM3, SIM4, RegimeConfig("deposit", "split", 0.01)]
D0 = date(2000, 1, 3)


def reference(ds, window, lev, regime):
    """Holdings / cash / equity bookkeeping, one calendar day at a time."""
    i0, i1 = ds.window_indices(window)
    E = 1.0
    H, C = lev * E, (1 - lev) * E
    for i in range(i0, i1):
        r = ds.market_return[i]
        dep, bor = ds.deposit_accrual[i], ds.borrow_accrual[i]
        H = H * (1 + r)
        if regime.cash_rates == "split" and C < 0:
            C = C * (1 + bor)
        else:
            C = C * (1 + dep)
        if H < 0 and regime.short_fee_source != "none":
            C -= abs(H) * (dep if regime.short_fee_source == "deposit" else bor)
        E = H + C
        if E <= 0:
            return E, True, ds.day(i)
        target = lev * E
        E -= regime.transaction_cost_rate * abs(target - H)
        if E <= 0:
            return E, True, ds.day(i)
        H, C = lev * E, (1 - lev) * E
    return E, False, None


def random_dataset(seed, n=400, vol=0.02, rate=0.05, spread=0.03):
    rng = np.random.default_rng(seed)
    rets = rng.normal(0.0003, vol, n)
    prices = 100 * np.cumprod(np.r_[1.0, 1 + rets])
    prices = [None if rng.random() < 0.25 and i else p for i, p in enumerate(prices)]
    return dataset_from_prices(prices, rate, rate + spread, start=D0)


@pytest.mark.parametrize("regime", REGIMES, ids=lambda r: r.label)
@pytest.mark.parametrize("lev", [-3.0, -0.5, 0.0, 0.4, 1.0, 2.5])
def test_matches_reference(backend, regime, lev):
    ds = random_dataset(7)
    window = (ds.day(3), ds.day(len(ds) - 5))
    res = run_backtest(ds, window, lev, regime)
    E, bankrupt, when = reference(ds, window, lev, regime)
    assert res.bankrupt == bankrupt
    assert res.final_equity == pytest.approx(E, rel=1e-10)
    years = ((window[1] - window[0]).days + 1) / 365
    assert res.growth_rate == pytest.approx(math.log(E) / years, rel=1e-10, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    lev=st.floats(-12, 12, allow_nan=False),
    reg=st.sampled_from(REGIMES),
    a=st.integers(0, 100),
    b=st.integers(0, 100),
)
def test_reference_property(seed, lev, reg, a, b):
    ds = random_dataset(seed, n=120, vol=0.05)
    lo, hi = sorted((a, b))
    window = (ds.day(lo), ds.day(hi))
    res = run_backtest(ds, window, lev, reg)
    E, bankrupt, when = reference(ds, window, lev, reg)
    assert res.bankrupt == bankrupt
    if bankrupt:
        assert res.bankruptcy_date == when
        assert res.growth_rate == -math.inf
        assert res.final_equity <= 0
        assert res.final_equity == pytest.approx(E, rel=1e-9, abs=1e-300)
    else:
        assert res.final_equity == pytest.approx(E, rel=1e-9)


def test_single_day_bankruptcy_closed_form():
    ds = dataset_from_prices([100.0, 100.0 * (1 - 0.2047)], 0.0, start=D0)
    w = (ds.day(1), ds.day(1))
    assert run_backtest(ds, w, 4.80, SIM1).final_equity == pytest.approx(1 - 4.80 * 0.2047)
    assert not run_backtest(ds, w, 1 / 0.2047 - 1e-9, SIM1).bankrupt
    res = run_backtest(ds, w, 4.89, SIM1)
    assert res.bankrupt and res.bankruptcy_date == ds.day(1)
    assert res.final_equity == pytest.approx(1 - 4.89 * 0.2047)


def test_short_side_boundary():
    ds = dataset_from_prices([100.0, 111.58], 0.0, start=D0)
    w = (ds.day(1), ds.day(1))
    assert not run_backtest(ds, w, -8.5, SIM1).bankrupt
    assert run_backtest(ds, w, -8.64, SIM1).bankrupt


def test_flat_market_zero_leverage_earns_deposit():
    ds = dataset_from_prices([50.0] * 366, 0.04, start=D0)
    w = (ds.day(1), ds.end)
    res = run_backtest(ds, w, 0.0, SIM1)
    assert res.final_equity == pytest.approx((1 + 0.04 / 365) ** 365, rel=1e-13)
    assert res.growth_rate == pytest.approx(365 * math.log1p(0.04 / 365), rel=1e-13)


def test_zero_volatility_growth_linear_in_leverage():
    # constant daily return r, deposit d: factor 1 + d + l(r - d)
    n = 200
    r = 0.0002
    prices = 100 * (1 + r) ** np.arange(n)
    ds = dataset_from_prices(list(prices), 0.0365, start=D0)
    w = (ds.day(1), ds.end)
    for l in (-2.0, 0.0, 0.5, 3.0):
        expect = (n - 1) * math.log(1 + 0.0001 + l * (r - 0.0001)) / ((n - 1) / 365)
        assert run_backtest(ds, w, l, SIM1).growth_rate == pytest.approx(expect, rel=1e-10)


def test_regime_agreement_on_long_unlevered_positions():
    ds = random_dataset(3, n=600)
    w = (ds.start, ds.end)
    for l in (0.0, 0.25, 0.5, 0.75, 1.0):
        g = [run_backtest(ds, w, l, r).growth_rate for r in (SIM1, SIM2, SIM3)]
        assert g[0] == g[1] == g[2]
    for l in (0.0, 1.0):
        assert run_backtest(ds, w, l, SIM3).growth_rate == run_backtest(ds, w, l, SIM4).growth_rate


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1000), st.floats(-5, 5))
def test_costs_never_help(seed, lev):
    ds = random_dataset(seed, n=150)
    w = (ds.start, ds.end)
    g1 = run_backtest(ds, w, lev, SIM1).growth_rate
    g2 = run_backtest(ds, w, lev, SIM2).growth_rate
    g3 = run_backtest(ds, w, lev, SIM3).growth_rate
    g4 = run_backtest(ds, w, lev, SIM4).growth_rate
    assert g2 <= g1 + 1e-12
    assert g3 <= g2 + 1e-12
    assert g4 <= g3 + 1e-12


def test_non_trading_days_rebalance_and_accrue():
    ds = dataset_from_prices([100.0, None, None, 110.0], 0.0365, 0.0365, start=D0)
    w = (ds.day(1), ds.end)
    E, _, _ = reference(ds, w, 2.0, SIM4)
    assert run_backtest(ds, w, 2.0, SIM4).final_equity == pytest.approx(E, rel=1e-13)
    # two idle days borrowing at 0.0001/day, then the move
    e1 = 2.0 * 1.0 - 1.0 * 1.0001
    assert run_backtest(ds, (ds.day(1), ds.day(1)), 2.0, SIM1).final_equity == pytest.approx(e1)


def test_bankruptcy_stops_run():
    ds = dataset_from_prices([100.0, 40.0, 400.0], 0.0, start=D0)
    res = run_backtest(ds, (ds.start, ds.end), 2.0, SIM1)
    assert res.bankrupt and res.bankruptcy_date == ds.day(1)
    assert res.final_equity == pytest.approx(-0.2)


def test_presets_and_config():
    assert regime_preset(1) is SIM1 and regime_preset("sim4") is SIM4 and regime_preset("SIM3") is SIM3
    with pytest.raises(ValueError):
        regime_preset(5)
    assert not SIM1.kinked and SIM2.kinked and SIM4.kinked
    assert SIM4.transaction_cost_rate == 0.002
    with pytest.raises(ValueError):
        RegimeConfig("broker")
    with pytest.raises(ValueError):
        RegimeConfig(cash_rates="tiered")
    with pytest.raises(ValueError):
        RegimeConfig(transaction_cost_rate=-0.1)
    assert RegimeConfig("deposit", "split", 0.001).label == "fee=deposit,cash=split,tc=0.001"


def test_invalid_inputs():
    ds = random_dataset(1, n=20)
    with pytest.raises(ValueError):
        run_backtest(ds, (ds.start, ds.end), math.nan)
    with pytest.raises(ValueError):
        run_backtest(ds, (ds.end, ds.start), 1.0)
    with pytest.raises((ValueError, KeyError)):
        run_backtest(ds, (ds.start - timedelta(days=1), ds.end), 1.0)
    with pytest.raises(ValueError):
        growth_curve(ds, (ds.start, ds.end), [])


def test_growth_curve_rows():
    ds = random_dataset(2, n=50)
    curve = growth_curve(ds, (ds.start, ds.end), [0, 1, 2])
    assert [l for l, _ in curve] == [0.0, 1.0, 2.0]
    res = run_backtest(ds, (ds.start, ds.end), 1.0)
    assert curve[1][1] == res.growth_rate
    row = res.as_row()
    assert row["bankruptcy_date"] == "" and row["regime"] == "sim1"
