"""Optional numba acceleration.

Exposes ``njit`` that is numba's decorator when numba is importable and a
no-op pass-through otherwise, so every kernel keeps a pure-Python fallback.
"""

from __future__ import annotations

try:  # pragma: no cover - exercised implicitly by every kernel call
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


__all__ = ["njit", "HAVE_NUMBA"]
