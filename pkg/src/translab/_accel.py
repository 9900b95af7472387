"""Backend selection for the compiled kernels.

Set ``TRANSLAB_DISABLE_NUMBA=1`` to force the vectorized numpy path even
when numba is importable.  ``TRANSLAB_THREADS`` caps the numba worker
count.
"""
import os

_TRUTHY = ("1", "true", "yes", "on")

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("TRANSLAB_DISABLE_NUMBA", "").lower() not in _TRUTHY


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def configure_threads(value=None):
    """Apply ``TRANSLAB_THREADS`` (or ``value``) to numba; return the count in use."""
    raw = value if value is not None else os.environ.get("TRANSLAB_THREADS")
    if not HAVE_NUMBA:
        return 1
    if not raw:
        # querying numba would start its threading layer; the kernels are serial
        return int(numba.config.NUMBA_NUM_THREADS)
    n = max(1, min(int(raw), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
