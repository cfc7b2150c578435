"""Pick the compiled kernels when available.

Set ``BOLTZBENCH_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

fallback = _fallback

if os.environ.get("BOLTZBENCH_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"

compiled = kernels if BACKEND == "cython" else None
