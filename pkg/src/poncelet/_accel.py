"""Select between numba-compiled kernels and the pure numpy path.

Set ``PONCELET_DISABLE_NUMBA=1`` to force the numpy fallback even when
numba is importable.
"""
import os

_FLAG = os.environ.get("PONCELET_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not DISABLED


def njit(func):
    """``numba.njit(cache=True)`` when numba is available, identity otherwise."""
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
