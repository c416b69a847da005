"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the
pure-NumPy fallback is used. Set ``CATELAB_BACKEND=python`` to force the
fallback, or ``CATELAB_BACKEND=compiled`` to make a missing extension an
import error.
"""

import os

from . import _fallback

_requested = os.environ.get("CATELAB_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "compiled", "python"):
    raise ImportError(f"CATELAB_BACKEND must be auto, compiled or python, not {_requested!r}")

if _requested == "python":
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        if _requested == "compiled":
            raise
        kernels = _fallback

BACKEND = kernels.BACKEND
fallback = _fallback
