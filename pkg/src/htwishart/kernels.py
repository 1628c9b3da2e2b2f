"""Backend selection for the per-draw kernels.

The compiled Cython module is used when it was built; otherwise, or when
the environment variable ``HTW_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used. Both backends take and
return the same C-contiguous float64 arrays.
"""
from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_FORCE_PURE = os.environ.get("HTW_PURE_PYTHON", "") not in ("", "0")


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        name = "python" if (_FORCE_PURE or _compiled is None) else "cython"
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    if name == "python":
        return _kernels_py
    raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return "cython" if get_backend() is _compiled and _compiled is not None else "python"


def c64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)
