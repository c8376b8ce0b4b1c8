"""Kernel backend selection.

The hot loops live in two interchangeable modules: ``_kernels_numba`` (compiled
with numba) and ``_kernels_numpy`` (vectorized numpy, no compiler needed).
``BOXCT_BACKEND=numpy`` in the environment forces the fallback; otherwise numba
is used when it imports cleanly.
"""

from __future__ import annotations

import os
from types import ModuleType

_ENV_FLAG = "BOXCT_BACKEND"
_VALID = ("numba", "numpy")

_active: str | None = None


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except Exception:  # pragma: no cover - depends on the install
        return False
    return True


def _initial() -> str:
    requested = os.environ.get(_ENV_FLAG, "").strip().lower()
    if requested and requested not in _VALID:
        raise ValueError(f"{_ENV_FLAG} must be one of {_VALID}, got {requested!r}")
    if requested == "numpy":
        return "numpy"
    if _numba_available():
        return "numba"
    if requested == "numba":  # pragma: no cover
        raise ImportError(f"{_ENV_FLAG}=numba but numba cannot be imported")
    return "numpy"  # pragma: no cover


def get_backend() -> str:
    global _active
    if _active is None:
        _active = _initial()
    return _active


def set_backend(name: str) -> str:
    """Switch backend at runtime; returns the previous one."""
    global _active
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not _numba_available():  # pragma: no cover
        raise ImportError("numba is not installed")
    previous = get_backend()
    _active = name
    return previous


def kernels() -> ModuleType:
    if get_backend() == "numba":
        from . import _kernels_numba as mod
    else:
        from . import _kernels_numpy as mod
    return mod
