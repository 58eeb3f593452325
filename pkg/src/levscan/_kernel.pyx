# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backtest kernel; see ``_fallback`` for the reference contract.

Daily factors are multiplied into a running product that is folded into the
log-equity only when it leaves [1e-150, 1e150].
"""

from libc.math cimport log, exp, fabs

cdef double FOLD_HI = 1e150
cdef double FOLD_LO = 1e-150


def window_log_equity(const double[::1] ret, const double[::1] dep, const double[::1] bor,
                      Py_ssize_t start, Py_ssize_t stop, double lev,
                      int fee_mode, bint split, double tc):
    cdef double cash = 1.0 - lev
    cdef double h, c, e, post
    cdef double log_eq = 0.0
    cdef double prod = 1.0
    cdef bint charge_fee = fee_mode != 0 and lev < 0.0
    cdef bint use_borrow = split and cash < 0.0
    cdef const double[::1] cash_rate = bor if use_borrow else dep
    cdef const double[::1] fee_rate = dep if fee_mode == 1 else bor
    cdef Py_ssize_t i
    for i in range(start, stop):
        h = lev * (1.0 + ret[i])
        c = cash * (1.0 + cash_rate[i])
        if charge_fee:
            e = h + c - (-h) * fee_rate[i]
        else:
            e = h + c
        if e <= 0.0:
            return log_eq + log(prod), i, exp(log_eq) * prod * e
        if tc > 0.0:
            post = e - tc * fabs(lev * e - h)
            if post <= 0.0:
                return log_eq + log(prod), i, exp(log_eq) * prod * post
        else:
            post = e
        prod *= post
        if prod > FOLD_HI or prod < FOLD_LO:
            log_eq += log(prod)
            prod = 1.0
    return log_eq + log(prod), -1, 0.0
