"""Numba switch for the hot kernels.

Setting ``PERMFORGE_NO_NUMBA=1`` (or running without numba installed) routes
every kernel through its pure-numpy implementation instead.
"""

import os

_DISABLED = os.environ.get("PERMFORGE_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(func):
    """Compile ``func`` with numba when available, else return it untouched."""
    if _njit is None:
        return func
    return _njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
