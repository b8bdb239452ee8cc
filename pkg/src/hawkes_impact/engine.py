"""Selects the compiled thinning core when available, else the python mirror.

Set HAWKES_IMPACT_PURE_PYTHON=1 to force the fallback (used by the benchmark
and the engine-equivalence tests).
"""

from __future__ import annotations

import os

from . import _py_core

FAMILY_POWER = _py_core.FAMILY_POWER
FAMILY_EXP = _py_core.FAMILY_EXP


def _load_fast():
    try:
        from . import _fast
        return _fast
    except ImportError:
        return None


_fast = _load_fast()
if _fast is not None and os.environ.get("HAWKES_IMPACT_PURE_PYTHON", "") != "1":
    BACKEND = "cython"
    thin_exact = _fast.thin_exact
    thin_soe = _fast.thin_soe
else:
    BACKEND = "python"
    thin_exact = _py_core.thin_exact
    thin_soe = _py_core.thin_soe


def available_backends() -> dict:
    """All importable engine implementations, keyed by name."""
    out = {"python": _py_core}
    if _fast is not None:
        out["cython"] = _fast
    return out
