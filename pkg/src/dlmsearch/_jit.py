"""Numba switch.

Set ``DLMSEARCH_DISABLE_JIT=1`` to run every hot kernel through its pure-numpy
fallback instead of the compiled loop. The flag is read once at import time.
"""

import os

JIT_ENABLED = os.environ.get("DLMSEARCH_DISABLE_JIT", "0").strip().lower() not in ("1", "true", "yes")

try:
    from numba import njit as _numba_njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba_njit = None
    JIT_ENABLED = False


def njit(func=None, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    kwargs.setdefault("cache", True)
    if _numba_njit is None:
        if func is not None:
            return func
        return lambda f: f
    if func is not None:
        return _numba_njit(**kwargs)(func)
    return _numba_njit(**kwargs)
