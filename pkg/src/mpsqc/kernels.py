"""Kernel selection.

Imports the compiled extension when it was built, otherwise the NumPy
fallback. Set ``MPSQC_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("MPSQC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    IMPLEMENTATION = "numpy"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback
        IMPLEMENTATION = "numpy"
    else:
        IMPLEMENTATION = "cython"

staircase_scores = _impl.staircase_scores
staircase_shift_scores = _impl.staircase_shift_scores

__all__ = ["IMPLEMENTATION", "staircase_scores", "staircase_shift_scores"]
