"""Backend selection: compiled extension when built, pure Python otherwise."""

from __future__ import annotations

from . import pure

try:
    from . import _ckernels

    HAS_C_BACKEND = True
except ImportError:
    _ckernels = None
    HAS_C_BACKEND = False


def get_backend(name="auto"):
    """Return the backend module: 'c', 'pure', or 'auto' (compiled if built)."""
    if name == "auto":
        return _ckernels if HAS_C_BACKEND else pure
    if name == "c":
        if not HAS_C_BACKEND:
            raise ImportError("compiled backend not available")
        return _ckernels
    if name == "pure":
        return pure
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    return ("c", "pure") if HAS_C_BACKEND else ("pure",)


DEFAULT = get_backend()
BACKEND_NAME = "c" if HAS_C_BACKEND else "pure"
