"""Optional numba acceleration.

Set ``BREPMAE_NUMBA=0`` in the environment to force the pure-numpy code
paths (useful for debugging and for the kernel benchmark).
"""

import os

_FLAG = os.environ.get("BREPMAE_NUMBA", "1").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is an optional speedup
    _numba = None

USE_NUMBA = _numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when acceleration is enabled, otherwise a no-op decorator."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap
