"""Numba acceleration switch.

Hot kernels (Bloch time stepping, prox grid oracle) are compiled with
numba when available.  Setting the environment variable
MULTIBANG_DISABLE_NUMBA=1 selects the pure-numpy fallback paths instead,
which compute the same results (slower, but with no compilation step).
"""

import os

_disabled = os.environ.get("MULTIBANG_DISABLE_NUMBA", "0").lower() not in ("0", "", "false")

try:
    if _disabled:
        raise ImportError
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        # decorator stub: @njit and @njit(...) both return the function unchanged
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def accel_mode():
    return "numba" if HAVE_NUMBA else "numpy"
