"""Reference implementations: the sequential oracle and a global-lock graph.

SequentialGraph is the sequential specification every concurrent
implementation is checked against: removal of a vertex eagerly drops all
incident edges (both directions) in the same call, which the concurrent
structures realize lazily through the destination-mark rule.
"""

from __future__ import annotations

import threading

from .codes import EdgeOp, OpKind, check_user_key


class SequentialGraph:
    """Single-threaded directed graph over integer keys."""

    def __init__(self):
        self.vertices: set[int] = set()
        self.edges: set[tuple[int, int]] = set()

    def add_vertex(self, key):
        if not check_user_key(key) or key in self.vertices:
            return False
        self.vertices.add(key)
        return True

    def remove_vertex(self, key):
        if key not in self.vertices:
            return False
        self.vertices.discard(key)
        self.edges = {(a, b) for (a, b) in self.edges if a != key and b != key}
        return True

    def contains_vertex(self, key):
        return key in self.vertices

    def add_edge(self, key1, key2):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        if key1 not in self.vertices or key2 not in self.vertices:
            return EdgeOp.VERTEX_NOT_PRESENT
        if (key1, key2) in self.edges:
            return EdgeOp.EDGE_ALREADY_PRESENT
        self.edges.add((key1, key2))
        return EdgeOp.EDGE_ADDED

    def remove_edge(self, key1, key2):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        if key1 not in self.vertices or key2 not in self.vertices:
            return EdgeOp.VERTEX_NOT_PRESENT
        if (key1, key2) not in self.edges:
            return EdgeOp.EDGE_NOT_PRESENT
        self.edges.discard((key1, key2))
        return EdgeOp.EDGE_REMOVED

    def contains_edge(self, key1, key2):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        if key1 not in self.vertices or key2 not in self.vertices:
            return EdgeOp.VERTEX_NOT_PRESENT
        if (key1, key2) in self.edges:
            return EdgeOp.EDGE_PRESENT
        return EdgeOp.VERTEX_OR_EDGE_NOT_PRESENT

    def snapshot(self):
        return set(self.vertices), set(self.edges)


def oracle_apply(g: SequentialGraph, op, args):
    """Apply one operation tag to the oracle, returning the canonical result."""
    op = OpKind(op)
    if op == OpKind.ADD_VERTEX:
        return g.add_vertex(args[0])
    if op == OpKind.REMOVE_VERTEX:
        return g.remove_vertex(args[0])
    if op == OpKind.FIND_VERTEX:
        return g.contains_vertex(args[0])
    if op == OpKind.ADD_EDGE:
        return g.add_edge(args[0], args[1])
    if op == OpKind.REMOVE_EDGE:
        return g.remove_edge(args[0], args[1])
    if op == OpKind.FIND_EDGE:
        return g.contains_edge(args[0], args[1])
    raise ValueError(f"unknown op {op!r}")


class CoarseLockGraph:
    """SequentialGraph behind one global lock; linearizable by construction."""

    def __init__(self):
        self._g = SequentialGraph()
        self._lock = threading.Lock()

    def add_vertex(self, key):
        with self._lock:
            return self._g.add_vertex(key)

    def remove_vertex(self, key):
        with self._lock:
            return self._g.remove_vertex(key)

    def contains_vertex(self, key):
        with self._lock:
            return self._g.contains_vertex(key)

    def add_edge(self, key1, key2):
        with self._lock:
            return self._g.add_edge(key1, key2)

    def remove_edge(self, key1, key2):
        with self._lock:
            return self._g.remove_edge(key1, key2)

    def contains_edge(self, key1, key2):
        with self._lock:
            return self._g.contains_edge(key1, key2)

    def snapshot(self):
        with self._lock:
            return self._g.snapshot()
