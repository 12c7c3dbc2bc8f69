"""Numba toggle shared by the hot kernels.

Every performance-critical loop in this package exists twice: a numba
``@njit`` kernel and a numpy (or plain Python) fallback implementing the
same arithmetic in the same order, so both lanes produce identical output.
The active lane is chosen once at import time:

* numba importable and ``LOBKIT_DISABLE_NUMBA`` unset/0  ->  jit lane
* otherwise                                              ->  fallback lane

``benchmarks/bench_kernels.py`` times the two lanes against each other.
"""

import os

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def _numba_njit(*args, **kwargs):
        def wrap(func):
            return func

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return wrap


def _env_disabled() -> bool:
    return os.environ.get("LOBKIT_DISABLE_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
    )


#: True when the jit lane is active for this process.
NUMBA_ENABLED = HAVE_NUMBA and not _env_disabled()

#: Decorator for kernels: numba's njit, or identity when numba is missing.
#: Kernels decorated with this must stay nopython-compilable.
njit = _numba_njit


def active_lane() -> str:
    """Name of the lane selected at import time ("numba" or "numpy")."""
    return "numba" if NUMBA_ENABLED else "numpy"
