"""Statistics over windows: parabolic fits of growth against leverage,
rolling and expanding optimal-leverage series, and the scaling of the
optimal-leverage spread with window length."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from typing import Sequence

import numpy as np

from .backtest import DAYS_PER_YEAR, SIM1, RegimeConfig, growth_curve
from .gbm import lopt_stdev
from .market_data import MarketDataset
from .search import DEFAULT_BRACKET, DEFAULT_TOL, MAX_BOUND, find_optimal_leverage

__all__ = [
    "FitError",
    "ParabolaFit",
    "ScalingRow",
    "WindowPoint",
    "WindowSeries",
    "expanding_lopt",
    "fit_full_window",
    "fit_parabola",
    "rolling_lopt",
    "scaling_slope",
    "stdev_scaling",
]

DEFAULT_FIT_RANGE = (-7.0, 3.0)
DEFAULT_CURVE_GRID = tuple(np.linspace(-8.0, 3.0, 111))
DEFAULT_ENVELOPE_SIGMA = 0.158


class FitError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ParabolaFit:
    mu_riskless: float
    mu_excess: float
    sigma: float
    fit_range: tuple[float, float]
    residual_rms: float
    n_points: int = 0

    @property
    def l_opt(self) -> float:
        return self.mu_excess / self.sigma**2

    def __call__(self, leverage):
        l = np.asarray(leverage, dtype=float)
        return self.mu_riskless + self.mu_excess * l - (self.sigma * l) ** 2 / 2.0


def fit_parabola(
    curve: Sequence[tuple[float, float]],
    l_opt_fixed: float,
    g_opt_fixed: float,
    fit_range: tuple[float, float] = DEFAULT_FIT_RANGE,
) -> ParabolaFit:
    """One-parameter least-squares fit of ``g(l) = g* - (sigma^2/2)(l - l*)^2``.

    The vertex ``(l*, g*)`` is held fixed; only the curvature is fitted, over
    points with ``fit_range[0] <= l <= fit_range[1]`` and finite growth.
    """
    lmin, lmax = fit_range
    pts = [(l, g) for l, g in curve if lmin <= l <= lmax and math.isfinite(g)]
    if len(pts) < 3:
        raise FitError(f"need at least 3 finite points in {fit_range}, got {len(pts)}")
    l = np.array([p[0] for p in pts])
    g = np.array([p[1] for p in pts])
    u = (l - l_opt_fixed) ** 2
    drop = g_opt_fixed - g
    denom = float(u @ u)
    if denom == 0.0:
        raise FitError("all fit points coincide with the vertex")
    half_var = float(u @ drop) / denom
    if not half_var > 0.0:
        raise FitError(f"fitted curvature {half_var} is not negative-definite")
    var = 2.0 * half_var
    resid = drop - half_var * u
    mu_excess = l_opt_fixed * var
    return ParabolaFit(
        mu_riskless=g_opt_fixed - mu_excess**2 / (2.0 * var),
        mu_excess=mu_excess,
        sigma=math.sqrt(var),
        fit_range=(lmin, lmax),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=len(pts),
    )


def fit_full_window(
    ds: MarketDataset,
    regime: RegimeConfig = SIM1,
    window: tuple[date, date] | None = None,
    leverages: Sequence[float] = DEFAULT_CURVE_GRID,
    fit_range: tuple[float, float] = DEFAULT_FIT_RANGE,
):
    """Growth curve, located optimum and parabola fit for one window."""
    window = window or (ds.start, ds.end)
    est = find_optimal_leverage(ds, window, regime)
    if not est.finite:
        raise FitError("optimum diverged; no vertex to fix")
    curve = growth_curve(ds, window, leverages, regime)
    return fit_parabola(curve, est.l_opt, est.growth_at_opt, fit_range), est, curve


@dataclass(frozen=True)
class WindowPoint:
    start: date
    end: date
    l_opt: float
    growth: float
    diverged: int

    @property
    def years(self) -> float:
        return ((self.end - self.start).days + 1) / DAYS_PER_YEAR


@dataclass
class WindowSeries:
    """Optimal leverage per window end date.  ``window_length`` is in years,
    or ``None`` for an expanding window."""

    window_length: float | None
    regime: str
    points: list[WindowPoint] = field(default_factory=list)
    envelope_sigma: float | None = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def end_dates(self) -> list[date]:
        return [p.end for p in self.points]

    @property
    def l_opts(self) -> np.ndarray:
        return np.array([p.l_opt for p in self.points])

    def envelope(self, k: float, center: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """``center -/+ k / (sigma sqrt(T))`` for each point."""
        if self.envelope_sigma is None:
            raise ValueError("series has no envelope sigma")
        half = np.array([k * lopt_stdev(self.envelope_sigma, p.years) for p in self.points])
        return center - half, center + half

    def fraction_outside(self, k: float, center: float = 1.0) -> tuple[float, int]:
        """Share of finite points outside the k-stdev band, and how many
        diverged points were left out of that share."""
        lo, hi = self.envelope(k, center)
        l = self.l_opts
        finite = np.isfinite(l)
        n = int(finite.sum())
        if n == 0:
            return math.nan, len(l)
        outside = ((l < lo) | (l > hi)) & finite
        return float(outside.sum()) / n, len(l) - n

    def rows(self) -> list[dict]:
        out = []
        env = {}
        if self.envelope_sigma is not None:
            for k in (1, 2):
                env[k] = self.envelope(k)
        for i, p in enumerate(self.points):
            row = {
                "window_start": p.start.isoformat(),
                "end_date": p.end.isoformat(),
                "years": p.years,
                "regime": self.regime,
                "l_opt": p.l_opt,
                "growth": p.growth,
                "diverged": p.diverged,
            }
            for k, (lo, hi) in env.items():
                row[f"env{k}_lo"] = float(lo[i])
                row[f"env{k}_hi"] = float(hi[i])
            out.append(row)
        return out


def _end_indices(ds: MarketDataset, first: int, stride: int) -> np.ndarray:
    """Trading-day indices >= ``first``, every ``stride``-th counted back from
    the last one so the final trading day is always included."""
    if stride < 1:
        raise ValueError("stride must be at least 1")
    idx = ds.trading_indices()
    idx = idx[idx >= first]
    return idx[::-1][::stride][::-1]


def _point(ds, i0, i1, regime, bracket, tol, max_bound) -> WindowPoint:
    window = (ds.day(i0), ds.day(i1 - 1))
    est = find_optimal_leverage(ds, window, regime, bracket, tol, max_bound)
    return WindowPoint(window[0], window[1], est.l_opt, est.growth_at_opt, est.diverged)


def window_days(years: float) -> int:
    return max(1, int(round(years * DAYS_PER_YEAR)))


def rolling_lopt(
    ds: MarketDataset,
    window_length: float,
    regime: RegimeConfig = SIM1,
    stride: int = 1,
    *,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol: float = DEFAULT_TOL,
    max_bound: float = MAX_BOUND,
) -> WindowSeries:
    """Optimal leverage on trailing windows of ``window_length`` years ending on
    every ``stride``-th trading day."""
    n = window_days(window_length)
    if n > len(ds):
        raise ValueError(f"window of {n} days exceeds dataset span of {len(ds)} days")
    series = WindowSeries(window_length, regime.label)
    for end in _end_indices(ds, n - 1, stride):
        series.points.append(_point(ds, end - n + 1, end + 1, regime, bracket, tol, max_bound))
    return series


def expanding_lopt(
    ds: MarketDataset,
    start: date | None = None,
    regime: RegimeConfig = SIM1,
    stride: int = 1,
    *,
    min_days: int = 1,
    envelope_sigma: float = DEFAULT_ENVELOPE_SIGMA,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol: float = DEFAULT_TOL,
    max_bound: float = MAX_BOUND,
) -> WindowSeries:
    """Optimal leverage on ``[start, end]`` for every ``stride``-th trading day
    ``end`` at least ``min_days`` calendar days after ``start``; the last
    trading day is always included."""
    i0 = ds.index_of(start or ds.start)
    series = WindowSeries(None, regime.label, envelope_sigma=envelope_sigma)
    for end in _end_indices(ds, i0 + min_days - 1, stride):
        series.points.append(_point(ds, i0, end + 1, regime, bracket, tol, max_bound))
    return series


@dataclass(frozen=True)
class ScalingRow:
    years: float
    stdev: float
    prediction: float
    n_windows: int
    diverged_count: int
    mean: float = math.nan

    def as_row(self) -> dict:
        return {
            "T": self.years,
            "stdev": self.stdev,
            "prediction": self.prediction,
            "mean": self.mean,
            "n_windows": self.n_windows,
            "diverged_count": self.diverged_count,
        }


def stdev_scaling(
    ds: MarketDataset,
    window_lengths: Sequence[float],
    regime: RegimeConfig = SIM1,
    stride: int = 1,
    *,
    sigma: float = DEFAULT_ENVELOPE_SIGMA,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    tol: float = DEFAULT_TOL,
    max_bound: float = MAX_BOUND,
) -> list[ScalingRow]:
    """Sample standard deviation of finite optimal leverages over overlapping
    windows of each length, next to the prediction ``1/(sigma sqrt(T))``."""
    if len(window_lengths) < 2:
        raise ValueError("need >= 2 window lengths")
    rows = []
    for T in window_lengths:
        series = rolling_lopt(ds, T, regime, stride, bracket=bracket, tol=tol, max_bound=max_bound)
        l = series.l_opts
        finite = l[np.isfinite(l)]
        sd = float(np.std(finite, ddof=1)) if finite.size >= 2 else math.nan
        mean = float(np.mean(finite)) if finite.size else math.nan
        rows.append(ScalingRow(T, sd, lopt_stdev(sigma, T), len(l), len(l) - finite.size, mean))
    return rows


def scaling_slope(rows: Sequence[ScalingRow]) -> tuple[float, float]:
    """Least-squares slope and intercept of log(stdev) against log(T)."""
    pts = [(r.years, r.stdev) for r in rows if math.isfinite(r.stdev) and r.stdev > 0]
    if len(pts) < 2:
        raise FitError("need two finite standard deviations")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)
