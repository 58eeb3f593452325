"""Daily market data: FRED CSV ingestion and calendar alignment.

A :class:`MarketDataset` holds one entry per calendar day.  Days without a
price observation are non-trading days with a market return of exactly zero,
while interest keeps accruing on them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Literal, TextIO

import numpy as np

__all__ = [
    "DataError",
    "FredParseError",
    "MarketDataset",
    "RawSeries",
    "build_dataset",
    "dataset_from_prices",
    "longest_excess_run",
    "parse_fred_csv",
    "read_fred_csv",
]

MISSING = "."
DATE_HEADERS = ("date", "observation_date")
DATASET_COLUMNS = ("date", "is_trading_day", "market_return", "deposit_rate", "borrow_rate")


class DataError(ValueError):
    """Input data cannot be turned into a usable dataset."""


class FredParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RawSeries:
    """One FRED series as read from disk; missing values are ``None``."""

    series_id: str
    observations: tuple[tuple[date, float | None], ...] = ()

    def __post_init__(self):
        obs = tuple(self.observations)
        for (d0, _), (d1, _) in zip(obs, obs[1:]):
            if d1 <= d0:
                raise DataError(f"{self.series_id}: dates not strictly increasing at {d1}")
        object.__setattr__(self, "observations", obs)

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def dates(self) -> list[date]:
        return [d for d, _ in self.observations]

    @property
    def values(self) -> list[float | None]:
        return [v for _, v in self.observations]

    def present(self) -> list[tuple[date, float]]:
        return [(d, v) for d, v in self.observations if v is not None]

    def to_csv(self) -> str:
        lines = ["DATE,VALUE"]
        for d, v in self.observations:
            lines.append(f"{d.isoformat()},{MISSING if v is None else repr(v)}")
        return "\n".join(lines) + "\n"


def parse_fred_csv(text: str | TextIO, series_id: str | None = None) -> RawSeries:
    """Parse a two-column FRED download (``DATE,VALUE`` or ``observation_date,<ID>``).

    Line numbers in errors are 1-based and count the header as line 1.
    If ``series_id`` is not given it is taken from the header's value column.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FredParseError("empty file, expected a header row", 1) from None
    header = [h.strip() for h in header]
    if len(header) != 2 or header[0].lower().lstrip("﻿") not in DATE_HEADERS:
        raise FredParseError(f"unexpected header {','.join(header)!r}", 1)
    if series_id is None:
        series_id = header[1] if header[1].upper() != "VALUE" else "VALUE"

    observations: list[tuple[date, float | None]] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise FredParseError(f"expected 2 columns, got {len(row)}", line)
        raw_date, raw_value = row[0].strip(), row[1].strip()
        try:
            day = date.fromisoformat(raw_date)
        except ValueError:
            raise FredParseError(f"malformed date {raw_date!r}", line) from None
        if raw_value == MISSING or raw_value == "":
            value = None
        else:
            try:
                value = float(raw_value)
            except ValueError:
                raise FredParseError(f"non-numeric value {raw_value!r}", line) from None
            if not math.isfinite(value):
                raise FredParseError(f"non-finite value {raw_value!r}", line)
        if observations and day <= observations[-1][0]:
            raise FredParseError(f"date {raw_date} does not increase", line)
        observations.append((day, value))
    return RawSeries(series_id, tuple(observations))


def read_fred_csv(path, series_id: str | None = None) -> RawSeries:
    with open(path, newline="") as fh:
        return parse_fred_csv(fh, series_id)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MarketDataset:
    """Calendar-aligned daily series.

    Rates are annualized fractions.  ``deposit_accrual`` and ``borrow_accrual``
    are the per-calendar-day simple accruals ``rate / day_count``.
    """

    calendar: np.ndarray  # datetime64[D], consecutive days
    market_return: np.ndarray
    deposit_rate: np.ndarray
    borrow_rate: np.ndarray
    is_trading_day: np.ndarray
    day_count: float = 365.0
    deposit_accrual: np.ndarray = field(init=False, repr=False)
    borrow_accrual: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cal = np.asarray(self.calendar, dtype="datetime64[D]")
        n = len(cal)
        arrays = {
            "market_return": np.asarray(self.market_return, dtype=np.float64),
            "deposit_rate": np.asarray(self.deposit_rate, dtype=np.float64),
            "borrow_rate": np.asarray(self.borrow_rate, dtype=np.float64),
            "is_trading_day": np.asarray(self.is_trading_day, dtype=bool),
        }
        if n == 0:
            raise DataError("dataset has no days")
        for name, a in arrays.items():
            if a.shape != (n,):
                raise DataError(f"{name} has shape {a.shape}, expected ({n},)")
        if n > 1 and np.any(np.diff(cal).astype(np.int64) != 1):
            raise DataError("calendar days are not consecutive")
        ret = arrays["market_return"]
        if np.any(ret[~arrays["is_trading_day"]] != 0.0):
            raise DataError("non-trading day with non-zero market return")
        if not np.all(ret > -1.0) or not np.all(np.isfinite(ret)):
            raise DataError("market return must be finite and greater than -1")
        if self.day_count <= 0:
            raise DataError("day_count must be positive")
        object.__setattr__(self, "calendar", _readonly(cal))
        for name, a in arrays.items():
            object.__setattr__(self, name, _readonly(a))
        object.__setattr__(self, "deposit_accrual", _readonly(arrays["deposit_rate"] / self.day_count))
        object.__setattr__(self, "borrow_accrual", _readonly(arrays["borrow_rate"] / self.day_count))

    def __len__(self) -> int:
        return len(self.calendar)

    @property
    def start(self) -> date:
        return self.calendar[0].item()

    @property
    def end(self) -> date:
        return self.calendar[-1].item()

    def day(self, i: int) -> date:
        return self.calendar[i].item()

    def index_of(self, day: date) -> int:
        i = (day - self.start).days
        if not 0 <= i < len(self):
            raise DataError(f"{day} outside dataset range {self.start}..{self.end}")
        return i

    def window_indices(self, window: tuple[date, date]) -> tuple[int, int]:
        """Half-open index range ``[i0, i1)`` for an inclusive date window."""
        start, end = window
        if end < start:
            raise DataError(f"window end {end} precedes start {start}")
        return self.index_of(start), self.index_of(end) + 1

    def trading_indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_trading_day)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarketDataset):
            return NotImplemented
        return (
            self.day_count == other.day_count
            and np.array_equal(self.calendar, other.calendar)
            and np.array_equal(self.is_trading_day, other.is_trading_day)
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("market_return", "deposit_rate", "borrow_rate")
            )
        )

    def to_csv(self) -> str:
        """Canonical aligned CSV; floats use ``repr`` so a re-parse is bit-exact."""
        out = io.StringIO()
        out.write(",".join(DATASET_COLUMNS) + "\n")
        for i in range(len(self)):
            out.write(
                f"{self.day(i).isoformat()},{int(self.is_trading_day[i])},"
                f"{float(self.market_return[i])!r},{float(self.deposit_rate[i])!r},"
                f"{float(self.borrow_rate[i])!r}\n"
            )
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str | TextIO, day_count: float = 365.0) -> "MarketDataset":
        stream = io.StringIO(text) if isinstance(text, str) else text
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DATASET_COLUMNS:
            raise FredParseError(f"expected header {','.join(DATASET_COLUMNS)}", 1)
        days, trading, ret, dep, bor = [], [], [], [], []
        for row in reader:
            if not row:
                continue
            try:
                days.append(np.datetime64(date.fromisoformat(row[0]), "D"))
                trading.append(row[1].strip() == "1")
                ret.append(float(row[2]))
                dep.append(float(row[3]))
                bor.append(float(row[4]))
            except (ValueError, IndexError) as exc:
                raise FredParseError(str(exc), reader.line_num) from None
        return cls(np.array(days, dtype="datetime64[D]"), ret, dep, bor, trading, day_count)


def _carry_forward(series: RawSeries, days: list[date], backfill: bool, scale: float) -> np.ndarray:
    present = series.present()
    if not present:
        raise DataError(f"{series.series_id}: no present observations")
    out = np.empty(len(days))
    j = -1
    current = None
    for i, d in enumerate(days):
        while j + 1 < len(present) and present[j + 1][0] <= d:
            j += 1
            current = present[j][1]
        if current is None:
            if not backfill:
                raise DataError(
                    f"{series.series_id}: no observation on or before {d} "
                    f"(first is {present[0][0]})"
                )
            out[i] = present[0][1] * scale
        else:
            out[i] = current * scale
    return out


def build_dataset(
    price: RawSeries,
    deposit: RawSeries,
    borrow: RawSeries,
    start: date | None = None,
    end: date | None = None,
    *,
    day_count: float = 365.0,
    rates_in_percent: bool = True,
    backfill_rates: bool = False,
) -> MarketDataset:
    """Align a price series and two rate series onto consecutive calendar days.

    A day trades iff the price is present on it and an earlier present price
    exists (possibly before ``start``).  Rate gaps carry the last value
    forward; ``backfill_rates`` fills a leading gap with the first value
    instead of failing.
    """
    prices = price.present()
    if start is None:
        start = prices[0][0] if prices else None
    if end is None:
        end = prices[-1][0] if prices else None
    if start is None or end is None or end < start:
        raise DataError("empty or inverted date range")
    in_range = [(d, p) for d, p in prices if start <= d <= end]
    if len(in_range) < 2:
        raise DataError(f"{price.series_id}: fewer than 2 present prices in {start}..{end}")
    for d, p in prices:
        if p <= 0:
            raise DataError(f"{price.series_id}: non-positive price {p} on {d}")

    n = (end - start).days + 1
    days = [start + timedelta(days=i) for i in range(n)]
    ret = np.zeros(n)
    trading = np.zeros(n, dtype=bool)
    prev = None
    for d, p in prices:
        if d > end:
            break
        if d >= start and prev is not None:
            i = (d - start).days
            ret[i] = p / prev - 1.0
            trading[i] = True
        prev = p

    scale = 0.01 if rates_in_percent else 1.0
    dep = _carry_forward(deposit, days, backfill_rates, scale)
    bor = _carry_forward(borrow, days, backfill_rates, scale)
    cal = np.arange(np.datetime64(start, "D"), np.datetime64(end, "D") + 1)
    return MarketDataset(cal, ret, dep, bor, trading, day_count)


def dataset_from_prices(
    prices: Iterable[float],
    deposit_rate: float | Iterable[float],
    borrow_rate: float | Iterable[float] | None = None,
    start: date = date(2000, 1, 3),
    day_count: float = 365.0,
) -> MarketDataset:
    """Dataset on consecutive days from ``start``; rates are fractions.

    A ``None`` price marks a non-trading day.  Every other day after the
    first present price trades against the previous present price.
    """
    p = np.array([np.nan if x is None else x for x in prices], dtype=np.float64)
    n = len(p)
    present = ~np.isnan(p)
    seen = np.cumsum(present)
    trading = present & (seen > 1)
    idx = np.where(present, np.arange(n), 0)
    np.maximum.accumulate(idx, out=idx)
    filled = p[idx]
    ret = np.zeros(n)
    prev = filled[:-1]
    ret[1:] = np.where(trading[1:], p[1:] / np.where(np.isnan(prev), 1.0, prev) - 1.0, 0.0)
    dep = np.broadcast_to(np.asarray(deposit_rate, dtype=np.float64), (n,))
    bor = dep if borrow_rate is None else np.broadcast_to(np.asarray(borrow_rate, dtype=np.float64), (n,))
    cal = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + n)
    return MarketDataset(cal, ret, dep, bor, trading, day_count)


def longest_excess_run(
    ds: MarketDataset,
    sign: Literal["up", "down"],
    window: tuple[date, date] | None = None,
) -> tuple[int, list[tuple[date, date]]]:
    """Longest run of consecutive trading days beating (``up``) or trailing
    (``down``) the day's deposit accrual.  Non-trading days neither extend nor
    break a run.  Returns the length and every ``(first, last)`` date pair
    attaining it."""
    if sign not in ("up", "down"):
        raise ValueError(f"sign must be 'up' or 'down', not {sign!r}")
    i0, i1 = (0, len(ds)) if window is None else ds.window_indices(window)
    idx = np.flatnonzero(ds.is_trading_day[i0:i1]) + i0
    excess = ds.market_return[idx] - ds.deposit_accrual[idx]
    hit = excess > 0 if sign == "up" else excess < 0

    best, runs = 0, []
    run_start = None
    for k in range(len(idx) + 1):
        if k < len(idx) and hit[k]:
            if run_start is None:
                run_start = k
            continue
        if run_start is not None:
            length = k - run_start
            span = (ds.day(idx[run_start]), ds.day(idx[k - 1]))
            if length > best:
                best, runs = length, [span]
            elif length == best:
                runs.append(span)
            run_start = None
    return best, runs
