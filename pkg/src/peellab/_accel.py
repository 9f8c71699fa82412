"""Numba switch for the hot kernels.

Kernels are compiled with numba unless ``PEELLAB_DISABLE_NUMBA`` is set to a
truthy value (or numba is not importable), in which case callers dispatch to
the vectorised numpy implementations instead.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

DISABLE_ENV = "PEELLAB_DISABLE_NUMBA"


def _env_disabled():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = numba is not None and not _env_disabled()


def njit(fn=None, **kw):
    """``numba.njit(cache=True)`` when numba is active, identity otherwise."""
    def wrap(f):
        if USE_NUMBA:
            return numba.njit(cache=True, **kw)(f)
        return f
    if fn is not None:
        return wrap(fn)
    return wrap


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
