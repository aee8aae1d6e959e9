"""Kernel backend selection.

The compiled extension is preferred when importable; SPHEREFV_KERNELS can
force a choice: "cython", "python" or "auto" (default).
"""
from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("SPHEREFV_KERNELS", "auto").lower()

if _requested not in ("auto", "cython", "python"):
    raise RuntimeError(f"SPHEREFV_KERNELS={_requested!r}: expected auto|cython|python")

kernels = _kernels_py
BACKEND = "python"

if _requested in ("auto", "cython"):
    try:
        from . import _kernels as _compiled

        kernels = _compiled
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise RuntimeError("SPHEREFV_KERNELS=cython but the compiled "
                               "extension is not built")
