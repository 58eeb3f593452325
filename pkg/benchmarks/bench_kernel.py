"""Compare the compiled and numpy backtest kernels.

    python benchmarks/bench_kernel.py [--years 55] [--repeat 5]

Times single full-window backtests and full-window optimal-leverage
searches on a synthetic dataset for each available backend.
"""

import argparse
import timeit

from levscan import kernels
from levscan.backtest import SIM1, SIM4, run_backtest
from levscan.gbm import GbmParams, synthetic_dataset
from levscan.search import find_optimal_leverage


def bench(ds, repeat):
    w = (ds.start, ds.end)
    cases = {
        "backtest sim1": lambda: run_backtest(ds, w, 0.8, SIM1),
        "backtest sim4": lambda: run_backtest(ds, w, 0.8, SIM4),
        "search sim1": lambda: find_optimal_leverage(ds, w, SIM1),
        "search sim4": lambda: find_optimal_leverage(ds, w, SIM4),
    }
    out = {}
    for name, fn in cases.items():
        n, _ = timeit.Timer(fn).autorange()
        out[name] = min(timeit.repeat(fn, number=n, repeat=repeat)) / n
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--years", type=float, default=55.0)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    ds = synthetic_dataset(GbmParams(0.05, 0.02, 0.16), args.years, seed=1)
    print(f"dataset: {len(ds)} days, backends: {', '.join(kernels.available())}")
    results = {}
    for name in kernels.available():
        with kernels.use_backend(name):
            results[name] = bench(ds, args.repeat)
    print(f"{'case':<16}" + "".join(f"{b:>14}" for b in results) + ("     speedup" if len(results) > 1 else ""))
    for case in results["numpy"]:
        line = f"{case:<16}" + "".join(f"{r[case] * 1e3:>11.3f} ms" for r in results.values())
        if "cython" in results:
            line += f"{results['numpy'][case] / results['cython'][case]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
