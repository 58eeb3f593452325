"""Pure-Python (numpy) backtest kernel.

Same contract and per-day arithmetic as the compiled ``_kernel`` module.
Equity is homogeneous of degree one in the previous day's equity, so every
day is evaluated from unit equity and the daily factors are compounded in
log space.
"""

import numpy as np

FEE_NONE, FEE_DEPOSIT, FEE_BORROW = 0, 1, 2


def daily_factors(ret, dep, bor, lev, fee_mode, split, tc):
    """Per-day equity factors ``E_d / E_{d-1}`` before and after trading costs."""
    cash = 1.0 - lev
    h = lev * (1.0 + ret)
    if split and cash < 0.0:
        c = cash * (1.0 + bor)
    else:
        c = cash * (1.0 + dep)
    if fee_mode != FEE_NONE and lev < 0.0:
        fee = (-h) * (dep if fee_mode == FEE_DEPOSIT else bor)
        e = h + c - fee
    else:
        e = h + c
    if tc > 0.0:
        post = e - tc * np.abs(lev * e - h)
    else:
        post = e
    return e, post


def window_log_equity(ret, dep, bor, start, stop, lev, fee_mode, split, tc):
    """Compound one constant-leverage investment over days ``[start, stop)``.

    Returns ``(log_equity, bankrupt_index, bankrupt_equity)``; the index is -1
    when the investment survives.  On bankruptcy ``log_equity`` covers the days
    before the failing one and ``bankrupt_equity`` is the (non-positive)
    equity recorded on it.
    """
    e, post = daily_factors(ret[start:stop], dep[start:stop], bor[start:stop], lev, fee_mode, split, tc)
    bad = np.flatnonzero((e <= 0.0) | (post <= 0.0))
    if bad.size:
        k = int(bad[0])
        log_eq = float(np.log(post[:k]).sum())
        factor = e[k] if e[k] <= 0.0 else post[k]
        return log_eq, start + k, float(np.exp(log_eq) * factor)
    return float(np.log(post).sum()), -1, 0.0
