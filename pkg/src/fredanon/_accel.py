"""Numba switch for the hot kernels.

Set ``FREDANON_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
The flag is read once at import time.
"""

import os

_DISABLED = os.environ.get("FREDANON_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

USE_NUMBA = numba is not None


def njit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)
