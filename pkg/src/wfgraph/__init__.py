"""Concurrent unbounded directed graph.

Lock-free fast path, wait-free slow path via operation descriptors and
phase-ordered helping, a fast-path/slow-path facade, reference baselines,
a benchmark harness and an offline linearizability checker.

Two backends provide the same API: a compiled extension (hot kernels in
C++, operations release the GIL) and a pure-Python fallback. The compiled
one is selected at import when available.
"""

from . import backend, baselines, bench, codes, lincheck, marked_ref, pure
from .backend import BACKEND_NAME, HAS_C_BACKEND, available_backends, get_backend
from .codes import EXHAUSTED, CapacityExceeded, EdgeOp, OpKind, PendingOperation

LockFreeGraph = backend.DEFAULT.LockFreeGraph
WaitFreeEngine = backend.DEFAULT.WaitFreeEngine
FpspGraph = backend.DEFAULT.FpspGraph

__all__ = [
    "EXHAUSTED",
    "EdgeOp",
    "OpKind",
    "CapacityExceeded",
    "PendingOperation",
    "HAS_C_BACKEND",
    "BACKEND_NAME",
    "available_backends",
    "get_backend",
    "LockFreeGraph",
    "WaitFreeEngine",
    "FpspGraph",
    "backend",
    "baselines",
    "bench",
    "codes",
    "lincheck",
    "marked_ref",
    "pure",
]
