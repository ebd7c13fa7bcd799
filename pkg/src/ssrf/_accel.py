"""Backend switch for the compiled kernels.

Set ``SSRF_DISABLE_NUMBA=1`` to force the pure-numpy code path (useful when
debugging or when numba is unavailable).
"""
import os

_FALSY = {"0", "false", "no", "off", ""}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("SSRF_DISABLE_NUMBA", "0").lower() in _FALSY


def njit(func):
    """Compile ``func`` with numba when available, else return it untouched."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
