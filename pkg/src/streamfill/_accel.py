"""Optional numba acceleration.

Hot kernels are written twice: a numba ``@njit`` loop version and a pure
numpy version. ``STREAMFILL_DISABLE_NUMBA=1`` (or a missing numba install)
selects the numpy path everywhere. Both paths are kept importable so the
test-suite and ``benchmarks/bench_kernels.py`` can compare them directly.
"""
from __future__ import annotations

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("STREAMFILL_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """``numba.njit`` with cache/nogil on, or an identity decorator without numba."""
    if not HAS_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return numba.njit(*args, **kwargs)


def select(numba_impl, numpy_impl):
    """Return the implementation chosen by the environment flag."""
    return numba_impl if USE_NUMBA else numpy_impl
