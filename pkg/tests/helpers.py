"""Shared test machinery: trace generation, differential runs, stress + checking."""

from __future__ import annotations

import random
import threading

from wfgraph.baselines import SequentialGraph
from wfgraph.codes import OpKind
from wfgraph.lincheck import RecordingGraph, TraceRecorder, Verdict, check

SIX_OPS = list(OpKind)[:6]


def random_trace(seed, n_ops, key_max, weights=(2, 2, 2, 2, 2, 2)):
    """Deterministic list of (op, k1, k2) tuples over keys 1..key_max."""
    rng = random.Random(seed)
    cum = []
    acc = 0
    for w in weights:
        acc += w
        cum.append(acc)
    out = []
    for _ in range(n_ops):
        r = rng.randrange(acc)
        op = SIX_OPS[next(i for i, c in enumerate(cum) if r < c)]
        k1 = rng.randrange(1, key_max + 1)
        k2 = rng.randrange(1, key_max + 1)
        while k2 == k1 and key_max > 1:
            k2 = rng.randrange(1, key_max + 1)
        out.append((op, k1, k2))
    return out


def apply_op(view, op, k1, k2):
    if op == OpKind.ADD_VERTEX:
        return view.add_vertex(k1)
    if op == OpKind.REMOVE_VERTEX:
        return view.remove_vertex(k1)
    if op == OpKind.FIND_VERTEX:
        return view.contains_vertex(k1)
    if op == OpKind.ADD_EDGE:
        return view.add_edge(k1, k2)
    if op == OpKind.REMOVE_EDGE:
        return view.remove_edge(k1, k2)
    return view.contains_edge(k1, k2)


def replay(view, trace):
    return [apply_op(view, *t) for t in trace]


def differential(view, trace):
    """Replay trace on view and on a fresh SequentialGraph; return mismatches."""
    oracle = SequentialGraph()
    mismatches = []
    for i, (op, k1, k2) in enumerate(trace):
        got = apply_op(view, op, k1, k2)
        want = apply_op(oracle, op, k1, k2)
        if got != want:
            mismatches.append((i, op, k1, k2, got, want))
    return mismatches


class EngineView:
    def __init__(self, engine):
        self._e = engine

    def add_vertex(self, k):
        return self._e.wf_add_vertex(k)

    def remove_vertex(self, k):
        return self._e.wf_remove_vertex(k)

    def contains_vertex(self, k):
        return self._e.wf_contains_vertex(k)

    def add_edge(self, a, b):
        return self._e.wf_add_edge(a, b)

    def remove_edge(self, a, b):
        return self._e.wf_remove_edge(a, b)

    def contains_edge(self, a, b):
        return self._e.wf_contains_edge(a, b)


def stress_record(make_view, n_threads, ops_per_thread, key_max, seed, register=None):
    """Run a concurrent randomized workload, recording a history."""
    rec = TraceRecorder()
    view = make_view
    barrier = threading.Barrier(n_threads)
    errors = []

    def worker(tid):
        try:
            if register is not None:
                register()
            wrapped = RecordingGraph(view, rec, tid)
            trace = random_trace(seed * 1_000_003 + tid, ops_per_thread, key_max)
            barrier.wait()
            replay(wrapped, trace)
        except Exception as e:  # surfaced by the caller
            errors.append(e)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(n_threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return rec.history()


def check_linearizable(history, limit=2_000_000):
    result = check(history, limit)
    if result.verdict == Verdict.EXHAUSTED:
        result = check(history, limit * 10)
    return result


def assert_cas_log_clean(entries):
    """Validate successful-CAS logs: mark monotonicity and per-cell chaining.

    entries: (cell_id, old_target, old_mark, new_target, new_mark) tuples.
    Log order between threads is not guaranteed to match success order, so
    the chain condition is checked as a path condition on the transition
    multigraph of each cell rather than by log position.
    """
    by_cell = {}
    for cell, ot, om, nt, nm in entries:
        assert not om, f"cell {cell:#x}: successful CAS from a marked value"
        by_cell.setdefault(cell, []).append(((ot, om), (nt, nm)))
    for cell, trans in by_cell.items():
        deg = {}
        for old, new in trans:
            deg[old] = deg.get(old, 0) + 1
            deg[new] = deg.get(new, 0) - 1
        starts = [v for v, d in deg.items() if d == 1]
        ends = [v for v, d in deg.items() if d == -1]
        others = [v for v, d in deg.items() if d not in (-1, 0, 1)]
        assert not others and len(starts) <= 1 and len(ends) <= 1, (
            f"cell {cell:#x}: successful CAS transitions do not form a chain"
        )
