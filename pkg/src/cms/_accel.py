"""JIT plumbing: numba when available, plain Python otherwise.

Hot kernels in :mod:`cms._kernels` are written as scalar loops and decorated
with :func:`njit` from this module.  When numba is importable and the
``CMS_DISABLE_NUMBA`` environment variable is unset (or "0"), that is the real
``numba.njit``; otherwise it degrades to a no-op decorator and the same source
runs as ordinary Python.  Both paths execute identical arithmetic, so results
agree to the last ulp; only speed differs (see ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os
import warnings

DISABLE_ENV = "CMS_DISABLE_NUMBA"


class PerformanceWarning(UserWarning):
    pass


def _env_disabled() -> bool:
    return os.environ.get(DISABLE_ENV, "0").lower() not in ("", "0", "false", "no")


try:
    import numba as _numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    _numba = None
    NUMBA_AVAILABLE = False

JIT_ENABLED = NUMBA_AVAILABLE and not _env_disabled()

if JIT_ENABLED:
    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
else:
    if not NUMBA_AVAILABLE:  # pragma: no cover
        warnings.warn(
            "numba is not installed; simulation and coding kernels run as "
            "pure Python and will be much slower",
            PerformanceWarning,
            stacklevel=2,
        )

    def njit(*args, **kwargs):
        # No-op decorator: @njit, @njit(), and @njit(cache=True) all work.
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def python_impl(kernel):
    """Return the pure-Python implementation backing a kernel."""
    return getattr(kernel, "py_func", kernel)
