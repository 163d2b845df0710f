"""Kernel backend selection.

The env var SUBDIFF_KERNELS picks the backend at import: "numba" (default
when importable), "numpy" for the pure-numpy fallback, or "auto".
`set_backend` switches at runtime, which the benchmarks use to compare both.
"""
from __future__ import annotations

import os

_backend = None


def _load(name: str):
    if name == "numpy":
        from . import numpy_backend

        return numpy_backend
    if name == "numba":
        from . import numba_backend

        return numba_backend
    raise ValueError(f"unknown kernel backend {name!r} (use 'numba' or 'numpy')")


def _initial():
    name = os.environ.get("SUBDIFF_KERNELS", "auto").strip().lower()
    if name in ("", "auto"):
        try:
            return _load("numba")
        except ImportError:
            return _load("numpy")
    return _load(name)


def get_backend():
    global _backend
    if _backend is None:
        _backend = _initial()
    return _backend


def set_backend(name: str):
    """Switch kernels at runtime; returns the previous backend name."""
    global _backend
    prev = get_backend().NAME
    _backend = _load(name)
    return prev


def backend_name() -> str:
    return get_backend().NAME


import contextlib


@contextlib.contextmanager
def use_backend(name: str):
    prev = set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)
