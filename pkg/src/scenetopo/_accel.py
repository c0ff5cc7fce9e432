"""Numba switch shared by the hot kernels.

Set ``SCENETOPO_NUMBA=0`` to force the pure-numpy implementations.  The flag
is read once at import time.
"""
import os

_flag = os.environ.get("SCENETOPO_NUMBA", "1").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _flag not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator.

    Kernels decorated here are always compiled when numba exists, so the
    numba path can be benchmarked even if ``USE_NUMBA`` is off.
    """
    if HAVE_NUMBA:
        from numba import njit as _njit

        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
