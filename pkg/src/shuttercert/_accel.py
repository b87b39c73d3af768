"""JIT switch shared by every hot kernel.

Kernels come in two flavours: a loop version compiled with numba, and a
vectorized numpy version.  ``SHUTTER_CERTIFY_DISABLE_JIT=1`` (or a missing
numba install) routes every dispatcher to the numpy path.
"""

import os

try:
    import numba as _nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None
    HAVE_NUMBA = False


def jit_enabled():
    """True when dispatchers should use the compiled kernels."""
    flag = os.environ.get("SHUTTER_CERTIFY_DISABLE_JIT", "0").strip().lower()
    return HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


def thread_cap():
    """Worker count honoured by batch-parallel code (``SHUTTER_CERTIFY_THREADS``)."""
    raw = os.environ.get("SHUTTER_CERTIFY_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pick_backend(backend=None):
    """Resolve an explicit ``backend`` argument ('numba', 'numpy' or None)."""
    if backend is None:
        return "numba" if jit_enabled() else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        return "numpy"
    return backend
