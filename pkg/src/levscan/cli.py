"""Command-line front end.

Every command writes plot-ready CSV (default) or JSON.  The first CSV line
(or the ``manifest`` key in JSON) records the command, its parameters and
SHA-256 checksums of the input files.  Floats are written with 10
significant digits so reruns are byte-identical.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .backtest import PRESETS, RegimeConfig, regime_preset, run_backtest
from .gbm import GbmParams, UndefinedOptimumError, simulate_market, simulate_paths
from .market_data import DataError, MarketDataset, build_dataset, longest_excess_run, read_fred_csv
from .search import find_optimal_leverage
from .windows import FitError, expanding_lopt, fit_full_window, rolling_lopt, scaling_slope, stdev_scaling

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.10g}"
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return fmt(v) if not math.isfinite(v) else float(f"{v:.10g}")
    if isinstance(value, np.integer):
        return int(value)
    return value


def render(rows: list[dict], manifest: dict, out_format: str) -> str:
    if out_format == "json":
        payload = {"manifest": manifest, "rows": [{k: _json_value(v) for k, v in r.items()} for r in rows]}
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for r in rows:
            writer.writerow([fmt(v) for v in r.values()])
    return buf.getvalue()


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(round((b - a) / step)) + 1
            return [round(a + k * step, 12) for k in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use a:b:step or a,b,c") from None


def parse_pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


def parse_regimes(text: str) -> list[RegimeConfig]:
    try:
        return [regime_preset(k.strip()) for k in text.split(",") if k.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _regimes(args, default_all: bool = False) -> list[RegimeConfig]:
    explicit = args.short_fee is not None or args.cash_rates is not None or args.tc is not None
    if explicit:
        return [
            RegimeConfig(
                args.short_fee or "none",
                args.cash_rates or "single",
                args.tc if args.tc is not None else 0.0,
            )
        ]
    if args.regime:
        return args.regime
    return list(PRESETS.values()) if default_all else [PRESETS["sim1"]]


def load_dataset(args) -> tuple[MarketDataset, dict]:
    checksums = {}
    if args.dataset:
        path = Path(args.dataset)
        if not path.is_file():
            raise DataError(f"dataset file not found: {path}")
        checksums[str(path)] = sha256(path)
        with open(path, newline="") as fh:
            ds = MarketDataset.from_csv(fh, args.day_count)
    else:
        paths = {"price": args.price, "deposit-rate": args.deposit_rate, "borrow-rate": args.borrow_rate}
        missing_flags = [k for k, v in paths.items() if not v]
        if missing_flags:
            raise UsageError("need --dataset or all of --price, --deposit-rate, --borrow-rate")
        series = {}
        for key, p in paths.items():
            path = Path(p)
            if not path.is_file():
                raise DataError(f"{key} file not found: {path}")
            checksums[str(path)] = sha256(path)
            series[key] = read_fred_csv(path)
        return build_dataset(
            series["price"],
            series["deposit-rate"],
            series["borrow-rate"],
            args.start,
            args.end,
            day_count=args.day_count,
            backfill_rates=args.backfill_rates,
        ), checksums
    if args.start or args.end:
        ds = _slice(ds, args.start or ds.start, args.end or ds.end)
    return ds, checksums


def _slice(ds: MarketDataset, start: date, end: date) -> MarketDataset:
    i0, i1 = ds.window_indices((start, end))
    ret = ds.market_return[i0:i1].copy()
    trading = ds.is_trading_day[i0:i1].copy()
    return MarketDataset(
        ds.calendar[i0:i1], ret, ds.deposit_rate[i0:i1], ds.borrow_rate[i0:i1], trading, ds.day_count
    )


def _window(ds: MarketDataset) -> tuple[date, date]:
    return ds.start, ds.end


# --- commands -------------------------------------------------------------


def cmd_sweep(args, ds):
    rows = []
    w = _window(ds)
    for reg in _regimes(args, default_all=True):
        for l in args.leverages:
            r = run_backtest(ds, w, l, reg)
            rows.append(
                {
                    "regime": reg.label,
                    "leverage": l,
                    "growth_rate": r.growth_rate,
                    "final_equity": r.final_equity,
                    "bankrupt": r.bankrupt,
                    "bankruptcy_date": r.bankruptcy_date.isoformat() if r.bankruptcy_date else "",
                }
            )
    return rows


def cmd_opt(args, ds):
    w = _window(ds)
    return [
        find_optimal_leverage(ds, w, reg, args.bracket, args.tol, args.max_bound).as_row()
        for reg in _regimes(args)
    ]


def cmd_fit(args, ds):
    rows = []
    for reg in _regimes(args):
        fit, est, _ = fit_full_window(ds, reg, leverages=args.grid, fit_range=args.fit_range)
        rows.append(
            {
                "regime": reg.label,
                "l_opt": est.l_opt,
                "growth_at_opt": est.growth_at_opt,
                "mu_riskless": fit.mu_riskless,
                "mu_excess": fit.mu_excess,
                "sigma": fit.sigma,
                "fit_l_min": fit.fit_range[0],
                "fit_l_max": fit.fit_range[1],
                "residual_rms": fit.residual_rms,
                "n_points": fit.n_points,
            }
        )
    return rows


def cmd_rolling(args, ds):
    rows = []
    for reg in _regimes(args):
        for T in args.window_years:
            series = rolling_lopt(ds, T, reg, args.stride, bracket=args.bracket, tol=args.tol)
            for r in series.rows():
                rows.append({"window_years": T, **r})
    return rows


def cmd_expanding(args, ds):
    rows = []
    for reg in _regimes(args):
        series = expanding_lopt(
            ds, ds.start, reg, args.stride, min_days=args.min_days, envelope_sigma=args.sigma,
            bracket=args.bracket, tol=args.tol,
        )
        rows.extend(series.rows())
    return rows


def cmd_scaling(args, ds):
    rows = []
    for reg in _regimes(args):
        table = stdev_scaling(
            ds, args.window_years, reg, args.stride, sigma=args.sigma, bracket=args.bracket, tol=args.tol
        )
        try:
            slope, _ = scaling_slope(table)
        except FitError:
            slope = math.nan
        for r in table:
            rows.append({"regime": reg.label, **r.as_row(), "loglog_slope": slope})
    return rows


def cmd_runs(args, ds):
    rows = []
    for sign in ("up", "down"):
        length, spans = longest_excess_run(ds, sign)
        for first, last in spans:
            rows.append({"sign": sign, "length": length, "first": first.isoformat(), "last": last.isoformat()})
    return rows


def cmd_gbm(args):
    p = GbmParams(args.mu_riskless, args.mu_excess, args.sigma)
    if args.kind == "dataset":
        return build_dataset(*simulate_market(p, args.years, args.seed, args.gbm_start, args.borrow_spread)).to_csv()
    if args.kind == "fred":
        price, deposit, borrow = simulate_market(p, args.years, args.seed, args.gbm_start, args.borrow_spread)
        out = Path(args.out) if args.out else None
        if out is None:
            raise UsageError("--kind fred needs --out DIRECTORY")
        out.mkdir(parents=True, exist_ok=True)
        for name, s in (("price.csv", price), ("deposit.csv", deposit), ("borrow.csv", borrow)):
            (out / name).write_text(s.to_csv())
        return None
    paths = simulate_paths(p, args.leverage, args.years, args.dt, args.n_paths, args.seed, keep=args.keep)
    rows = []
    for i, q in enumerate(paths):
        for k, x in enumerate(q.values):
            t = min(k * q.stride * q.dt, q.horizon)
            rows.append({"path": i, "t": t, "x": float(x), "bankrupt": q.bankrupt})
    return rows


COMMANDS = {
    "sweep": cmd_sweep,
    "opt": cmd_opt,
    "fit": cmd_fit,
    "rolling": cmd_rolling,
    "expanding": cmd_expanding,
    "scaling": cmd_scaling,
    "runs": cmd_runs,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    data = common.add_argument_group("data")
    data.add_argument("--price", help="FRED CSV of daily index closes")
    data.add_argument("--deposit-rate", help="FRED CSV of the deposit rate (percent)")
    data.add_argument("--borrow-rate", help="FRED CSV of the borrow rate (percent)")
    data.add_argument("--dataset", help="aligned dataset CSV instead of the three FRED files")
    data.add_argument("--start", type=parse_date)
    data.add_argument("--end", type=parse_date)
    data.add_argument("--day-count", type=float, default=365.0, choices=(360.0, 365.0))
    data.add_argument("--backfill-rates", action="store_true", help="fill leading rate gaps with the first value")
    reg = common.add_argument_group("regime")
    reg.add_argument("--regime", type=parse_regimes, help="comma list of 1-4 / sim1-sim4")
    reg.add_argument("--short-fee", choices=("none", "deposit", "borrow"))
    reg.add_argument("--cash-rates", choices=("single", "split"))
    reg.add_argument("--tc", type=float, help="transaction cost rate")
    search = common.add_argument_group("search")
    search.add_argument("--bracket", type=parse_pair, default=(-10.0, 10.0))
    search.add_argument("--tol", type=float, default=1e-4)
    search.add_argument("--max-bound", type=float, default=100.0)
    out = common.add_argument_group("output")
    out.add_argument("--out", help="output file (default stdout)")
    out.add_argument("--format", choices=("csv", "json"), default="csv")
    out.add_argument("--backend", choices=("auto", "cython", "numpy"), default="auto")

    parser = _Parser(prog="levscan", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", parents=[common], help="growth rate against leverage")
    p.add_argument("--leverages", type=parse_grid, default=parse_grid("-8.5:4.8:0.1"))
    sub.add_parser("opt", parents=[common], help="optimal leverage on the full window")
    p = sub.add_parser("fit", parents=[common], help="parabola fit of the growth curve")
    p.add_argument("--grid", type=parse_grid, default=[float(x) for x in np.linspace(-8.0, 3.0, 111)])
    p.add_argument("--fit-range", type=parse_pair, default=(-7.0, 3.0))
    p = sub.add_parser("rolling", parents=[common], help="optimal leverage on trailing windows")
    p.add_argument("--window-years", type=parse_grid, default=[5.0, 10.0, 20.0, 40.0])
    p.add_argument("--stride", type=int, default=1, help="trading days between end dates")
    p = sub.add_parser("expanding", parents=[common], help="optimal leverage on an expanding window")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--min-days", type=int, default=1)
    p.add_argument("--sigma", type=float, default=0.158, help="volatility for the envelopes")
    p = sub.add_parser("scaling", parents=[common], help="stdev of optimal leverage against window length")
    p.add_argument("--window-years", type=parse_grid, default=[0.25, 0.5, 1.0, 2.0, 5.0, 10.0])
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--sigma", type=float, default=0.158)
    sub.add_parser("runs", parents=[common], help="longest runs beating / trailing the deposit rate")

    p = sub.add_parser("gbm", help="seeded synthetic market or equity paths")
    p.add_argument("--kind", choices=("dataset", "fred", "paths"), default="dataset")
    p.add_argument("--mu-riskless", type=float, default=0.05)
    p.add_argument("--mu-excess", type=float, default=0.02)
    p.add_argument("--sigma", type=float, default=0.16)
    p.add_argument("--years", type=float, default=55.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--leverage", type=float, default=1.0)
    p.add_argument("--n-paths", type=int, default=1)
    p.add_argument("--dt", type=float, default=1.0 / 365.0)
    p.add_argument("--keep", default="full", help="full, ends, or an integer recording stride")
    p.add_argument("--borrow-spread", type=float, default=0.0)
    p.add_argument("--gbm-start", type=parse_date, default=date(2000, 1, 1))
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _validate(args) -> None:
    if getattr(args, "stride", 1) < 1:
        raise UsageError("--stride must be >= 1")
    if args.command == "scaling" and len(args.window_years) < 2:
        raise UsageError("need >= 2 lengths for scaling")
    if args.command in ("rolling", "scaling") and any(T <= 0 for T in args.window_years):
        raise UsageError("window lengths must be positive")
    if hasattr(args, "tol") and not args.tol > 0:
        raise UsageError("--tol must be positive")
    if hasattr(args, "bracket") and not args.bracket[0] < args.bracket[1]:
        raise UsageError("--bracket needs lo < hi")
    if args.command == "gbm":
        if args.keep not in ("full", "ends"):
            try:
                args.keep = int(args.keep)
            except ValueError:
                raise UsageError("--keep must be full, ends or an integer") from None
        if args.n_paths < 1 or args.years <= 0 or args.dt <= 0 or args.sigma < 0:
            raise UsageError("gbm needs n-paths >= 1, years > 0, dt > 0, sigma >= 0")


def _manifest(args, checksums: dict) -> dict:
    params = {}
    for k, v in sorted(vars(args).items()):
        if k in ("price", "deposit_rate", "borrow_rate", "dataset", "out"):
            continue
        if isinstance(v, list) and v and isinstance(v[0], RegimeConfig):
            v = [r.label for r in v]
        elif isinstance(v, (date,)):
            v = v.isoformat()
        elif isinstance(v, tuple):
            v = list(v)
        params[k] = v
    return {"tool": "levscan", "version": __version__, "command": args.command, "params": params, "inputs": checksums}


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        _validate(args)
        if args.command == "gbm":
            result = cmd_gbm(args)
            if isinstance(result, str):
                _write(result, args.out)
            elif result is not None:
                _write(render(result, _manifest(args, {}), args.format), args.out)
            return EXIT_OK
        kernels.set_backend(args.backend)
        ds, checksums = load_dataset(args)
        rows = COMMANDS[args.command](args, ds)
        _write(render(rows, _manifest(args, checksums), args.format), args.out)
    except UsageError as exc:
        print(f"levscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"levscan: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, UndefinedOptimumError, ArithmeticError) as exc:
        print(f"levscan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"levscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
