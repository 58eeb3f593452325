"""Constant-leverage backtests on daily market data and the statistics of
the leverage that maximizes time-average growth."""

from . import kernels
from .backtest import SIM1, SIM2, SIM3, SIM4, BacktestResult, RegimeConfig, growth_curve, regime_preset, run_backtest
from .gbm import (
    GbmParams,
    GbmPath,
    ensemble_growth,
    estimate_growth,
    finite_window_lopt_samples,
    lopt_stdev,
    optimal_leverage,
    simulate_paths,
    synthetic_dataset,
    time_growth,
)
from .market_data import (
    DataError,
    FredParseError,
    MarketDataset,
    RawSeries,
    build_dataset,
    dataset_from_prices,
    longest_excess_run,
    parse_fred_csv,
    read_fred_csv,
)
from .search import OptimalLeverageEstimate, find_optimal_leverage, grid_oracle
from .windows import (
    ParabolaFit,
    WindowSeries,
    expanding_lopt,
    fit_parabola,
    rolling_lopt,
    stdev_scaling,
)

__version__ = "0.1.0"
