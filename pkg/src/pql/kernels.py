"""Kernel dispatch: the compiled extension when available, else the numpy fallback.

Set ``PQL_PURE_PYTHON=1`` before import to force the fallback.  Both backends
return identical arrays for identical inputs.
"""
from __future__ import annotations

import contextlib
import os
import types

from pql import _pykernels

_NAMES = (
    "raw_block",
    "axis_cells",
    "replicated_bisection",
    "replicated_bisection_nd",
    "tally_points",
    "tally_axis_hyperplanes",
    "proportional_pick",
    "hyperplane_cell_hits",
)


def _load_compiled() -> types.ModuleType | None:
    if os.environ.get("PQL_PURE_PYTHON") == "1":
        return None
    try:
        from pql import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()
_active: types.ModuleType = _compiled if _compiled is not None else _pykernels


def backend() -> str:
    return _active.BACKEND


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name: str) -> types.ModuleType:
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def _bind(mod: types.ModuleType) -> None:
    global _active
    _active = mod
    g = globals()
    for name in _NAMES:
        g[name] = getattr(mod, name)


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily route every kernel call through ``name``."""
    prev = _active
    _bind(get_backend(name))
    try:
        yield
    finally:
        _bind(prev)


_bind(_active)
