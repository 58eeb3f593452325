"""Optimal constant leverage for a window: golden-section search with
divergence detection, plus an exhaustive grid scan used as an oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Callable

import numpy as np

from .backtest import DAYS_PER_YEAR, SIM1, RegimeConfig, log_equity
from .market_data import MarketDataset

__all__ = [
    "OptimalLeverageEstimate",
    "divergence_sign",
    "find_optimal_leverage",
    "golden_section_max",
    "grid_oracle",
]

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_BRACKET = (-10.0, 10.0)
DEFAULT_TOL = 1e-4
MAX_BOUND = 100.0
KINK_GRID_STEP = 0.25
KINK_POINTS = (0.0, 1.0)
TIE_EPS = 1e-12


@dataclass(frozen=True)
class OptimalLeverageEstimate:
    """Result of a leverage search.

    ``diverged`` is +1/-1 when the optimum runs off to +/-infinity (then
    ``l_opt`` is the signed infinity and ``growth_at_opt`` the growth at the
    search bound) and 0 otherwise.
    """

    l_opt: float
    growth_at_opt: float
    diverged: int
    window: tuple[date, date]
    regime: str
    evaluations: int

    @property
    def finite(self) -> bool:
        return self.diverged == 0

    def as_row(self) -> dict:
        return {
            "window_start": self.window[0].isoformat(),
            "window_end": self.window[1].isoformat(),
            "regime": self.regime,
            "l_opt": self.l_opt,
            "growth_at_opt": self.growth_at_opt,
            "diverged": self.diverged,
            "evaluations": self.evaluations,
        }


class _Objective:
    """Cached growth rate as a function of leverage for one window."""

    def __init__(self, ds: MarketDataset, i0: int, i1: int, regime: RegimeConfig):
        self.ds, self.i0, self.i1, self.regime = ds, i0, i1, regime
        self.years = (i1 - i0) / DAYS_PER_YEAR
        self.cache: dict[float, float] = {}

    def __call__(self, lev: float) -> float:
        lev = float(lev)
        g = self.cache.get(lev)
        if g is None:
            log_eq, bk, _ = log_equity(self.ds, self.i0, self.i1, lev, self.regime)
            g = -math.inf if bk >= 0 else log_eq / self.years
            self.cache[lev] = g
        return g

    @property
    def evaluations(self) -> int:
        return len(self.cache)

    def best(self, lo: float = -math.inf, hi: float = math.inf) -> tuple[float, float]:
        """Best evaluated point in ``[lo, hi]``; near-ties go to the smallest
        ``|l|``, then to the positive side."""
        pts = [(l, g) for l, g in self.cache.items() if lo <= l <= hi]
        top = max(g for _, g in pts)
        if top == -math.inf:
            return _tie_break([l for l, _ in pts]), top
        eps = TIE_EPS * max(1.0, abs(top))
        near = [l for l, g in pts if g >= top - eps]
        l_best = _tie_break(near)
        return l_best, self.cache[l_best]


def _tie_break(levels) -> float:
    return min(levels, key=lambda l: (abs(l), l < 0))


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    """Maximize a unimodal ``f`` on ``[a, b]`` down to an interval of width ``tol``.

    ``-inf`` values (bankrupt leverages) compare as ordinary values.  When both
    interior probes are ``-inf`` the interval shrinks toward a finite end
    point, or toward zero if neither end is finite.
    """
    fa, fb = f(a), f(b)
    x1, x2 = b - INVPHI * (b - a), a + INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 == f2 == -math.inf:
            if fa > -math.inf and fa >= fb:
                b, fb = x1, f1
            elif fb > -math.inf:
                a, fa = x2, f2
            else:
                target = min(max(0.0, a), b)
                if target < x1:
                    b, fb = x1, f1
                elif target > x2:
                    a, fa = x2, f2
                else:
                    a, fa, b, fb = x1, f1, x2, f2
            x1, x2 = b - INVPHI * (b - a), a + INVPHI * (b - a)
            f1, f2 = f(x1), f(x2)
        elif f1 >= f2:
            b, fb = x2, f2
            x2, f2 = x1, f1
            x1 = b - INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, fa = x1, f1
            x1, f1 = x2, f2
            x2 = a + INVPHI * (b - a)
            f2 = f(x2)
    mid = 0.5 * (a + b)
    f(mid)
    return mid


def divergence_sign(ds: MarketDataset, i0: int, i1: int) -> int:
    """+1 if every trading day in ``[i0, i1)`` beats the deposit accrual, -1 if
    every one trails it, else 0 (also 0 without trading days)."""
    mask = ds.is_trading_day[i0:i1]
    if not mask.any():
        return 0
    excess = ds.market_return[i0:i1][mask] - ds.deposit_accrual[i0:i1][mask]
    if np.all(excess > 0.0):
        return 1
    if np.all(excess < 0.0):
        return -1
    return 0


def _search(f: _Objective, lo: float, hi: float, tol: float, kinked: bool) -> None:
    for k in KINK_POINTS:
        if lo <= k <= hi:
            f(k)
    if kinked:
        n = int(math.floor((hi - lo) / KINK_GRID_STEP + 1e-9)) + 1
        for l in lo + KINK_GRID_STEP * np.arange(n):
            f(l)
        f(hi)
        center, _ = f.best(lo, hi)
        a, b = max(lo, center - KINK_GRID_STEP), min(hi, center + KINK_GRID_STEP)
    else:
        a, b = lo, hi
    golden_section_max(f, a, b, tol)


def _expand(lo: float, hi: float, side: int, max_bound: float) -> tuple[float, float]:
    if side > 0:
        hi = min(max_bound, 2.0 * hi if hi > 0 else hi + (hi - lo))
    else:
        lo = max(-max_bound, 2.0 * lo if lo < 0 else lo - (hi - lo))
    return lo, hi


def find_optimal_leverage(
    ds: MarketDataset,
    window: tuple[date, date],
    regime: RegimeConfig = SIM1,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol: float = DEFAULT_TOL,
    max_bound: float = MAX_BOUND,
) -> OptimalLeverageEstimate:
    """Leverage maximizing final equity over ``window``.

    Windows where every trading day beats (trails) the deposit rate are
    reported as diverged without searching.  Otherwise a golden-section search
    runs on ``bracket``, which is doubled (up to ``max_bound``) while the
    optimum sits on its edge; an optimum still on the edge at ``max_bound`` is
    reported as diverged.  Kinked regimes scan a coarse grid first and always
    consider l=0 and l=1.
    """
    lo, hi = map(float, bracket)
    if not (lo < hi and math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"invalid bracket {bracket}")
    if not tol > 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    max_bound = max(max_bound, abs(lo), abs(hi))
    i0, i1 = ds.window_indices(window)
    f = _Objective(ds, i0, i1, regime)

    sign = divergence_sign(ds, i0, i1)
    if sign:
        bound = hi if sign > 0 else lo
        return OptimalLeverageEstimate(sign * math.inf, f(bound), sign, window, regime.label, f.evaluations)

    while True:
        _search(f, lo, hi, tol, regime.kinked)
        l_best, g_best = f.best(lo, hi)
        side = 1 if l_best >= hi - tol else -1 if l_best <= lo + tol else 0
        if side == 0 or g_best == -math.inf:
            return OptimalLeverageEstimate(l_best, g_best, 0, window, regime.label, f.evaluations)
        if (side > 0 and hi >= max_bound) or (side < 0 and lo <= -max_bound):
            return OptimalLeverageEstimate(side * math.inf, g_best, side, window, regime.label, f.evaluations)
        lo, hi = _expand(lo, hi, side, max_bound)


def grid_oracle(
    ds: MarketDataset,
    window: tuple[date, date],
    regime: RegimeConfig = SIM1,
    lo: float = DEFAULT_BRACKET[0],
    hi: float = DEFAULT_BRACKET[1],
    step: float = 0.01,
) -> tuple[float, float]:
    """Exhaustive scan of ``lo, lo+step, ..., <= hi``; exact ties resolved
    like the search (smallest ``|l|``, then positive)."""
    if not step > 0.0:
        raise ValueError("step must be positive")
    i0, i1 = ds.window_indices(window)
    years = (i1 - i0) / DAYS_PER_YEAR
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    best_l, best_g = None, -math.inf
    for k in range(n):
        l = round(lo + k * step, 12)
        log_eq, bk, _ = log_equity(ds, i0, i1, l, regime)
        g = -math.inf if bk >= 0 else log_eq / years
        if best_l is None or g > best_g or (g == best_g and (abs(l), l < 0) < (abs(best_l), best_l < 0)):
            best_l, best_g = l, g
    return best_l, best_g
