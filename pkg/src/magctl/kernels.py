"""Kernel backend selection.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
NumPy implementation in ``_pykernels``.  Set ``MAGCTL_PURE_PYTHON=1`` to force
the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("MAGCTL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

eval_components = backend.eval_components
rhs = backend.rhs
rk4 = backend.rk4


def get_backend(name: str | None = None):
    """Module implementing the kernels: ``"cython"``, ``"python"`` or the default."""
    if name is None:
        return backend
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not built")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
