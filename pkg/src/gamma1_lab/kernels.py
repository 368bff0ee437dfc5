"""Kernel selection: the compiled extension when importable, else the numpy fallback.

Set GAMMA1_LAB_PURE=1 to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("GAMMA1_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

inverse_table = _impl.inverse_table
vsum_grid = _impl.vsum_grid
vsum_batch = _impl.vsum_batch
admissible_coefficients = _impl.admissible_coefficients


def backends() -> dict:
    """Every importable backend module, keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled  # type: ignore[attr-defined]
    except ImportError:
        return out
    out["cython"] = compiled
    return out
