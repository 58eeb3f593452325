"""Leveraged geometric Brownian motion: closed forms and Monte Carlo paths.

The equity of an investment at leverage ``l`` follows
``dx = x((mu_riskless + l*mu_excess) dt + l*sigma dW)``.  Paths are
simulated with an Euler step on simple returns, the same compounding the
historical backtester applies to daily data.

Random streams: ``simulate_paths`` derives one child ``SeedSequence`` per
path from ``seed`` (path ``i`` uses ``SeedSequence(seed).spawn(n)[i]``), so
each path is reproducible on its own and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Literal, Sequence

import numpy as np

from .market_data import MarketDataset, RawSeries, build_dataset

__all__ = [
    "GbmParams",
    "GbmPath",
    "UndefinedOptimumError",
    "ensemble_growth",
    "estimate_growth",
    "finite_window_lopt_samples",
    "lopt_stdev",
    "optimal_leverage",
    "simulate_market",
    "simulate_paths",
    "synthetic_dataset",
    "time_growth",
]

DEFAULT_DT = 1.0 / 365.0


class UndefinedOptimumError(ArithmeticError):
    """Optimal leverage is undefined for zero volatility."""


@dataclass(frozen=True)
class GbmParams:
    mu_riskless: float
    mu_excess: float
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")

    @property
    def mu(self) -> float:
        return self.mu_riskless + self.mu_excess


@dataclass(frozen=True, eq=False)
class GbmPath:
    """One simulated equity path.

    ``values[k]`` is x at time ``k * stride * dt``; ``horizon`` is the time of
    the last stored value, which for a bankrupt path is the step where equity
    went non-positive (that value is stored, not dropped).
    """

    dt: float
    values: np.ndarray
    leverage: float
    bankrupt: bool = False
    horizon: float = 0.0
    stride: int = 1

    @property
    def initial(self) -> float:
        return float(self.values[0])

    @property
    def final(self) -> float:
        return float(self.values[-1])


def ensemble_growth(p: GbmParams, leverage: float) -> float:
    return p.mu_riskless + leverage * p.mu_excess


def time_growth(p: GbmParams, leverage: float) -> float:
    return p.mu_riskless + leverage * p.mu_excess - (leverage * p.sigma) ** 2 / 2.0


def optimal_leverage(p: GbmParams) -> float:
    if p.sigma == 0.0:
        raise UndefinedOptimumError("optimal leverage undefined for sigma == 0")
    return p.mu_excess / p.sigma**2


def lopt_stdev(p: GbmParams | float, years: float) -> float:
    """Standard deviation of the optimal leverage measured over ``years``.

    Accepts the parameters or a bare volatility.
    """
    sigma = p.sigma if isinstance(p, GbmParams) else float(p)
    if sigma <= 0.0 or years <= 0.0:
        raise ValueError("need sigma > 0 and years > 0")
    return 1.0 / (sigma * math.sqrt(years))


def _step_count(years: float, dt: float) -> int:
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    if not years >= dt:
        raise ValueError(f"horizon {years} shorter than one step {dt}")
    return int(round(years / dt))


def _one_path(drift, vol, n_steps, dt, seq, keep, leverage) -> GbmPath:
    factors = 1.0 + drift * dt
    if vol != 0.0:
        z = np.random.default_rng(seq).standard_normal(n_steps)
        factors = factors + vol * math.sqrt(dt) * z
    else:
        factors = np.full(n_steps, factors)
    bad = np.flatnonzero(factors <= 0.0)
    bankrupt = bad.size > 0
    if bankrupt:
        factors = factors[: bad[0] + 1]
    values = np.empty(len(factors) + 1)
    values[0] = 1.0
    np.cumprod(factors, out=values[1:])
    horizon = (len(values) - 1) * dt
    if keep == "ends":
        values = values[[0, -1]]
        stride = len(factors)
    elif isinstance(keep, int):
        idx = np.arange(0, len(values), keep)
        if idx[-1] != len(values) - 1:
            idx = np.append(idx, len(values) - 1)
        values = values[idx]
        stride = keep
    else:
        stride = 1
    return GbmPath(dt, values, leverage, bankrupt, horizon, stride)


def simulate_paths(
    p: GbmParams,
    leverage: float,
    years: float,
    dt: float = DEFAULT_DT,
    n_paths: int = 1,
    seed: int = 0,
    keep: Literal["full", "ends"] | int = "full",
) -> list[GbmPath]:
    """Euler paths of leveraged GBM starting at 1.

    ``keep`` selects what is stored: every step, only the endpoints, or every
    ``keep``-th step (the final value is always kept).
    """
    n_steps = _step_count(years, dt)
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    drift = ensemble_growth(p, leverage)
    vol = leverage * p.sigma
    seqs = np.random.SeedSequence(seed).spawn(n_paths)
    return [_one_path(drift, vol, n_steps, dt, s, keep, leverage) for s in seqs]


def estimate_growth(
    paths: Sequence[GbmPath],
    mode: Literal["ensemble", "time"],
    literal: bool = False,
) -> float:
    """Exponential growth rate estimated from a set of paths.

    ``ensemble``: ``ln(mean(x_T / x_0)) / T``, bankrupt paths counting as a
    total loss.  ``time``: mean of per-path ``ln(x_T / x_0) / T``, which is
    ``-inf`` if any path went bankrupt.  With ``literal=True`` the ensemble
    form averages the net change ``(x_T - x_0) / x_0`` inside the logarithm.
    """
    if not paths:
        raise ValueError("no paths")
    horizons = {round(q.horizon / q.dt) for q in paths if not q.bankrupt}
    if len(horizons) > 1:
        raise ValueError("paths do not share a horizon")
    if mode == "ensemble":
        survivors = [q for q in paths if not q.bankrupt]
        if not survivors:
            raise ValueError("every path went bankrupt")
        T = survivors[0].horizon
        ratios = np.array([0.0 if q.bankrupt else q.final / q.initial for q in paths])
        if literal:
            net = float(np.mean(ratios - 1.0))
            if net <= 0.0:
                raise ValueError("mean net change is not positive; literal estimator undefined")
            return math.log(net) / T
        return math.log(float(np.mean(ratios))) / T
    if mode == "time":
        if any(q.bankrupt for q in paths):
            return -math.inf
        T = paths[0].horizon
        return float(np.mean([math.log(q.final / q.initial) for q in paths])) / T
    raise ValueError(f"mode must be 'ensemble' or 'time', not {mode!r}")


def finite_window_lopt_samples(p: GbmParams, years: float, n: int, seed: int = 0) -> np.ndarray:
    """Draws of the optimal leverage measured on a window of ``years``:
    ``l_opt + W(T) / (sigma T)`` with ``W(T) ~ N(0, T)``."""
    center = optimal_leverage(p)
    if not years > 0.0:
        raise ValueError("years must be positive")
    if math.isinf(years):
        return np.full(n, center)
    w = np.random.default_rng(seed).standard_normal(n) * math.sqrt(years)
    return center + w / (p.sigma * years)


def simulate_market(
    p: GbmParams,
    years: float,
    seed: int = 0,
    start: date = date(2000, 1, 1),
    borrow_spread: float = 0.0,
) -> tuple[RawSeries, RawSeries, RawSeries]:
    """Synthetic FRED-style series: a daily GBM price index (one Euler step per
    calendar day) with flat deposit and borrow rates in percent."""
    path = simulate_paths(p, 1.0, years, DEFAULT_DT, 1, seed)[0]
    if path.bankrupt:
        raise ValueError("synthetic price path hit zero; lower sigma or change seed")
    prices = 100.0 * path.values
    days = [start + timedelta(days=i) for i in range(len(prices))]
    price = RawSeries("SYNTH", tuple(zip(days, (float(x) for x in prices))))
    deposit = RawSeries("SYNTH_DEPOSIT", ((start, p.mu_riskless * 100.0),))
    borrow = RawSeries("SYNTH_BORROW", ((start, (p.mu_riskless + borrow_spread) * 100.0),))
    return price, deposit, borrow


def synthetic_dataset(
    p: GbmParams,
    years: float,
    seed: int = 0,
    start: date = date(2000, 1, 1),
    borrow_spread: float = 0.0,
) -> MarketDataset:
    return build_dataset(*simulate_market(p, years, seed, start, borrow_spread))
