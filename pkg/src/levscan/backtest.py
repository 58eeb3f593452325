"""Daily-rebalanced constant-leverage backtests.

Each calendar day of a window, starting from holdings ``l*E`` and cash
``(1-l)*E``:

1. holdings earn the market return;
2. cash earns the deposit rate, or the borrow rate when negative under
   split-rate accounting;
3. a short position pays a fee on its marked value;
4. equity at or below zero is bankruptcy and the run stops;
5. the rebalancing trade back to ``l`` is charged the transaction cost.

Rebalancing happens on non-trading days too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Literal

from . import kernels
from .market_data import MarketDataset

__all__ = [
    "BacktestResult",
    "RegimeConfig",
    "SIM1",
    "SIM2",
    "SIM3",
    "SIM4",
    "growth_curve",
    "regime_preset",
    "run_backtest",
]

DAYS_PER_YEAR = 365.0

_FEE_CODES = {"none": 0, "deposit": 1, "borrow": 2}


@dataclass(frozen=True)
class RegimeConfig:
    """Interest and cost rules.

    short_fee_source: rate charged on the absolute value of a short position.
    cash_rates: ``single`` applies the deposit rate to all cash; ``split``
        charges the borrow rate on negative cash.
    transaction_cost_rate: fraction of the traded value lost on rebalancing.
    """

    short_fee_source: Literal["none", "deposit", "borrow"] = "none"
    cash_rates: Literal["single", "split"] = "single"
    transaction_cost_rate: float = 0.0
    name: str | None = None

    def __post_init__(self):
        if self.short_fee_source not in _FEE_CODES:
            raise ValueError(f"short_fee_source must be one of {sorted(_FEE_CODES)}")
        if self.cash_rates not in ("single", "split"):
            raise ValueError("cash_rates must be 'single' or 'split'")
        if not (self.transaction_cost_rate >= 0.0 and math.isfinite(self.transaction_cost_rate)):
            raise ValueError("transaction_cost_rate must be a finite non-negative number")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return f"fee={self.short_fee_source},cash={self.cash_rates},tc={self.transaction_cost_rate:g}"

    @property
    def kinked(self) -> bool:
        """True when fees, spreads or costs put slope breaks at l=0 or l=1."""
        return (
            self.short_fee_source != "none"
            or self.cash_rates == "split"
            or self.transaction_cost_rate > 0.0
        )


SIM1 = RegimeConfig("none", "single", 0.0, "sim1")
SIM2 = RegimeConfig("deposit", "single", 0.0, "sim2")
SIM3 = RegimeConfig("borrow", "split", 0.0, "sim3")
SIM4 = RegimeConfig("borrow", "split", 0.002, "sim4")
PRESETS = {"sim1": SIM1, "sim2": SIM2, "sim3": SIM3, "sim4": SIM4}


def regime_preset(key: int | str) -> RegimeConfig:
    """``1``..``4`` or ``"sim1"``..``"sim4"``."""
    k = str(key).lower()
    if not k.startswith("sim"):
        k = "sim" + k
    try:
        return PRESETS[k]
    except KeyError:
        raise ValueError(f"unknown regime {key!r}; expected 1-4 or sim1-sim4") from None


@dataclass(frozen=True)
class BacktestResult:
    final_equity: float
    growth_rate: float
    bankrupt: bool
    bankruptcy_date: date | None
    window: tuple[date, date]
    leverage: float
    regime: str = ""

    def as_row(self) -> dict:
        return {
            "window_start": self.window[0].isoformat(),
            "window_end": self.window[1].isoformat(),
            "leverage": self.leverage,
            "regime": self.regime,
            "final_equity": self.final_equity,
            "growth_rate": self.growth_rate,
            "bankrupt": self.bankrupt,
            "bankruptcy_date": self.bankruptcy_date.isoformat() if self.bankruptcy_date else "",
        }


def window_years(window: tuple[date, date]) -> float:
    return ((window[1] - window[0]).days + 1) / DAYS_PER_YEAR


def log_equity(ds: MarketDataset, i0: int, i1: int, leverage: float, regime: RegimeConfig):
    """Kernel call on an index range; returns ``(log_equity, bankrupt_index, bankrupt_equity)``."""
    return kernels.window_log_equity(
        ds.market_return,
        ds.deposit_accrual,
        ds.borrow_accrual,
        i0,
        i1,
        float(leverage),
        _FEE_CODES[regime.short_fee_source],
        regime.cash_rates == "split",
        float(regime.transaction_cost_rate),
    )


def run_backtest(
    ds: MarketDataset,
    window: tuple[date, date],
    leverage: float,
    regime: RegimeConfig = SIM1,
) -> BacktestResult:
    """Simulate unit equity held at constant ``leverage`` over an inclusive window."""
    if not math.isfinite(leverage):
        raise ValueError(f"leverage must be finite, got {leverage}")
    i0, i1 = ds.window_indices(window)
    log_eq, bk, bk_equity = log_equity(ds, i0, i1, leverage, regime)
    if bk >= 0:
        return BacktestResult(bk_equity, -math.inf, True, ds.day(bk), window, leverage, regime.label)
    years = (i1 - i0) / DAYS_PER_YEAR
    return BacktestResult(math.exp(log_eq), log_eq / years, False, None, window, leverage, regime.label)


def growth_curve(
    ds: MarketDataset,
    window: tuple[date, date],
    leverages: Iterable[float],
    regime: RegimeConfig = SIM1,
) -> list[tuple[float, float]]:
    levs = [float(x) for x in leverages]
    if not levs:
        raise ValueError("need at least one leverage")
    return [(l, run_backtest(ds, window, l, regime).growth_rate) for l in levs]


def full_window(ds: MarketDataset) -> tuple[date, date]:
    return ds.start, ds.end

