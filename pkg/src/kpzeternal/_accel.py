"""Switch between numba-compiled kernels and their numpy fallbacks.

Set ``KPZETERNAL_PURE_NUMPY=1`` before import to force the numpy paths.
"""
from __future__ import annotations

import os

_FLAG = "KPZETERNAL_PURE_NUMPY"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes")


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if _numba is None:
        return func
    return _numba.njit(cache=True, nogil=True)(func)
