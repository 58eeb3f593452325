"""Backend selection for the backtest kernel.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``LEVSCAN_BACKEND=numpy`` (or ``cython``) forces a choice at
import time, and :func:`use_backend` switches at runtime.
"""

from __future__ import annotations

import contextlib
import logging
import os

from . import _fallback

log = logging.getLogger(__name__)

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"numpy": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

_active = None


def available() -> list[str]:
    return sorted(BACKENDS)


def set_backend(name: str) -> None:
    global _active, window_log_equity
    if name == "auto":
        name = "cython" if "cython" in BACKENDS else "numpy"
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable (have {available()})")
    _active = name
    window_log_equity = BACKENDS[name].window_log_equity


def active() -> str:
    return _active


@contextlib.contextmanager
def use_backend(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


window_log_equity = _fallback.window_log_equity
set_backend(os.environ.get("LEVSCAN_BACKEND", "auto"))
if _compiled is None:
    log.debug("compiled kernel unavailable, using numpy fallback")
