import os
from pathlib import Path

import pytest

from levscan import kernels
from levscan.market_data import build_dataset, read_fred_csv

FRED_DIR = Path(os.environ.get("LEVSCAN_FRED_DIR", Path(__file__).parent / "data" / "fred"))
FRED_FILES = {"price": "SP500.csv", "deposit": "DFF.csv", "borrow": "DPRIME.csv"}


@pytest.fixture(params=kernels.available())
def backend(request):
    with kernels.use_backend(request.param):
        yield request.param


def load_historical():
    """S&P500 / DFF / DPRIME over the studied period, or None if absent."""
    from datetime import date

    paths = {k: FRED_DIR / v for k, v in FRED_FILES.items()}
    if not all(p.is_file() for p in paths.values()):
        return None
    series = {k: read_fred_csv(p) for k, p in paths.items()}
    return build_dataset(
        series["price"], series["deposit"], series["borrow"],
        date(1955, 8, 4), date(2010, 11, 17), backfill_rates=True,
    )


@pytest.fixture(scope="session")
def historical():
    ds = load_historical()
    if ds is None:
        pytest.fail(
            f"historical FRED fixtures not found in {FRED_DIR} "
            f"(need {', '.join(FRED_FILES.values())}; set LEVSCAN_FRED_DIR)",
            pytrace=False,
        )
    return ds


# --- acceptance reporting ---------------------------------------------------

_RESULTS = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        label = marker.args[0]
        title = (item.function.__doc__ or item.name).strip().splitlines()[0]
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _RESULTS.append((label, status, title))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, title in _RESULTS:
        terminalreporter.write_line(f"criterion {label:<4} {status}  {title}")
