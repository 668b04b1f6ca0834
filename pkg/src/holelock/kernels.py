"""Selects the compiled kernels when available, the pure-Python ones otherwise.

Set the environment variable ``HOLELOCK_PURE_PYTHON=1`` to force the
fallback (useful for debugging and for the equivalence tests).
"""
import os
import warnings

from . import _pykernels as python_impl

try:
    from . import _kernels as compiled_impl
except ImportError:  # pragma: no cover - depends on the build
    compiled_impl = None

COMPILED_AVAILABLE = compiled_impl is not None

if COMPILED_AVAILABLE and os.environ.get("HOLELOCK_PURE_PYTHON", "") in ("", "0"):
    _impl = compiled_impl
    USING_COMPILED = True
else:
    if not COMPILED_AVAILABLE:
        warnings.warn("compiled kernels not found, using the slower pure-Python fallback",
                      RuntimeWarning, stacklevel=2)
    _impl = python_impl
    USING_COMPILED = False

closed_loop = _impl.closed_loop
pv_integral = _impl.pv_integral
