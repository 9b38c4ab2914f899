"""Offline linearizability checking.

Records invoke/response histories from concurrent runs and searches for a
sequential witness order that (a) respects real-time precedence and (b) is
consistent with the sequential graph specification.

Result codes are validated as predicates over the abstract state rather
than by exact-value replay: a lookup-flavoured failure code is acceptable
at any point where its stated condition holds. This is required because an
operation overlapping a vertex removal may legitimately report the edge
view or the vertex view of the same absence, and either has a valid
linearization point.
"""

from __future__ import annotations

import argparse
import enum
import itertools
import json
import sys
import threading
from dataclasses import dataclass, field
from typing import Optional

from .codes import EdgeOp, check_user_key


class MalformedHistory(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    thread: int
    seq: int
    kind: str  # "inv" | "res"
    op: str    # addV remV conV addE remE conE
    args: tuple
    result: object  # None for invokes; bool or EdgeOp name for responses
    stamp: int

    def to_json(self):
        res = self.result
        if isinstance(res, EdgeOp):
            res = res.name
        return {
            "t": self.thread,
            "seq": self.seq,
            "kind": self.kind,
            "op": self.op,
            "args": list(self.args),
            "res": res,
            "stamp": self.stamp,
        }

    @staticmethod
    def from_json(d):
        return Event(
            thread=int(d["t"]),
            seq=int(d["seq"]),
            kind=d["kind"],
            op=d["op"],
            args=tuple(d["args"]),
            result=d.get("res"),
            stamp=int(d["stamp"]),
        )


@dataclass
class OpRecord:
    index: int
    thread: int
    op: str
    args: tuple
    result: object      # None when pending
    inv_stamp: int
    res_stamp: Optional[int]  # None when pending

    @property
    def pending(self):
        return self.res_stamp is None


@dataclass
class History:
    events: list[Event]
    ops: list[OpRecord] = field(default_factory=list)

    @staticmethod
    def from_events(events):
        events = sorted(events, key=lambda e: e.stamp)
        stamps = [e.stamp for e in events]
        if len(set(stamps)) != len(stamps):
            raise MalformedHistory("duplicate stamps")
        open_by_thread: dict[int, Event] = {}
        ops: list[OpRecord] = []
        for e in events:
            if e.kind == "inv":
                if e.thread in open_by_thread:
                    raise MalformedHistory(f"thread {e.thread} invoked while pending")
                open_by_thread[e.thread] = e
            elif e.kind == "res":
                inv = open_by_thread.pop(e.thread, None)
                if inv is None:
                    raise MalformedHistory(f"thread {e.thread} response without invoke")
                if inv.op != e.op or inv.args != e.args:
                    raise MalformedHistory(f"thread {e.thread} mismatched invoke/response")
                ops.append(
                    OpRecord(len(ops), e.thread, e.op, e.args, e.result, inv.stamp, e.stamp)
                )
            else:
                raise MalformedHistory(f"bad event kind {e.kind!r}")
        for inv in open_by_thread.values():
            ops.append(OpRecord(len(ops), inv.thread, inv.op, inv.args, None, inv.stamp, None))
        return History(events=events, ops=ops)

    def dump(self, path):
        with open(path, "w") as f:
            for e in self.events:
                f.write(json.dumps(e.to_json()) + "\n")

    @staticmethod
    def load(path):
        events = []
        with open(path) as f:
            for line in f:
                line = line.strip()
                if line:
                    events.append(Event.from_json(json.loads(line)))
        return History.from_events(events)


class TraceRecorder:
    """Per-thread append-only event logs with a global atomic stamp counter."""

    def __init__(self):
        self._stamp = itertools.count()
        self._logs: dict[int, list[Event]] = {}
        self._lock = threading.Lock()

    def _log_for(self, tid):
        log = self._logs.get(tid)
        if log is None:
            with self._lock:
                log = self._logs.setdefault(tid, [])
        return log

    def call(self, tid, op_name, args, fn):
        """Run fn(), stamping immediately before the call and after the return."""
        log = self._log_for(tid)
        seq = len(log)
        log.append(Event(tid, seq, "inv", op_name, tuple(args), None, next(self._stamp)))
        result = fn()
        res = result.name if isinstance(result, EdgeOp) else result
        log.append(Event(tid, len(log), "res", op_name, tuple(args), res, next(self._stamp)))
        return result

    def history(self):
        events = [e for log in self._logs.values() for e in log]
        return History.from_events(events)


class RecordingGraph:
    """Instrumented wrapper over any object exposing the six graph operations."""

    def __init__(self, impl, recorder: TraceRecorder, tid: int):
        self._impl = impl
        self._rec = recorder
        self._tid = tid

    def add_vertex(self, k):
        return self._rec.call(self._tid, "addV", (k,), lambda: self._impl.add_vertex(k))

    def remove_vertex(self, k):
        return self._rec.call(self._tid, "remV", (k,), lambda: self._impl.remove_vertex(k))

    def contains_vertex(self, k):
        return self._rec.call(self._tid, "conV", (k,), lambda: self._impl.contains_vertex(k))

    def add_edge(self, k1, k2):
        return self._rec.call(self._tid, "addE", (k1, k2), lambda: self._impl.add_edge(k1, k2))

    def remove_edge(self, k1, k2):
        return self._rec.call(self._tid, "remE", (k1, k2), lambda: self._impl.remove_edge(k1, k2))

    def contains_edge(self, k1, k2):
        return self._rec.call(self._tid, "conE", (k1, k2), lambda: self._impl.contains_edge(k1, k2))


# -- sequential specification as predicates -----------------------------------


def _norm_result(op, res):
    if res is None:
        return None
    if op in ("addV", "remV", "conV"):
        return bool(res)
    if isinstance(res, EdgeOp):
        return res
    if isinstance(res, str):
        return EdgeOp[res]
    return EdgeOp(res)


def _consistent(state, op, args, res):
    """Is the recorded result valid at a linearization point in this state?"""
    verts, edges = state
    if op == "addV":
        return res == (check_user_key(args[0]) and args[0] not in verts)
    if op == "remV":
        return res == (args[0] in verts)
    if op == "conV":
        return res == (args[0] in verts)
    k1, k2 = args
    keys_ok = k1 != k2 and check_user_key(k1) and check_user_key(k2)
    both = keys_ok and k1 in verts and k2 in verts
    has_edge = (k1, k2) in edges
    if op == "addE":
        if res == EdgeOp.VERTEX_NOT_PRESENT:
            return not both
        if res == EdgeOp.EDGE_ALREADY_PRESENT:
            return has_edge
        if res == EdgeOp.EDGE_ADDED:
            return both and not has_edge
        return False
    if op == "remE":
        if res == EdgeOp.VERTEX_NOT_PRESENT:
            return not both
        if res == EdgeOp.EDGE_NOT_PRESENT:
            return not has_edge
        if res == EdgeOp.EDGE_REMOVED:
            return both and has_edge
        return False
    if op == "conE":
        if res == EdgeOp.VERTEX_NOT_PRESENT:
            return not both
        if res == EdgeOp.EDGE_PRESENT:
            return both and has_edge
        if res == EdgeOp.VERTEX_OR_EDGE_NOT_PRESENT:
            return not (both and has_edge)
        return False
    raise MalformedHistory(f"unknown op {op!r}")


def _transition(state, op, args, res):
    """Abstract-state transition for a (consistent) recorded result."""
    verts, edges = state
    if op == "addV" and res is True:
        return verts | {args[0]}, edges
    if op == "remV" and res is True:
        k = args[0]
        return verts - {k}, frozenset(e for e in edges if k not in e)
    if op == "addE" and res == EdgeOp.EDGE_ADDED:
        return verts, edges | {tuple(args)}
    if op == "remE" and res == EdgeOp.EDGE_REMOVED:
        return verts, edges - {tuple(args)}
    return state


def _canonical(state, op, args):
    """Canonical result the oracle would produce in this state."""
    verts, edges = state
    if op == "addV":
        return check_user_key(args[0]) and args[0] not in verts
    if op == "remV":
        return args[0] in verts
    if op == "conV":
        return args[0] in verts
    k1, k2 = args
    keys_ok = k1 != k2 and check_user_key(k1) and check_user_key(k2)
    both = keys_ok and k1 in verts and k2 in verts
    has_edge = (k1, k2) in edges
    if op == "addE":
        if not both:
            return EdgeOp.VERTEX_NOT_PRESENT
        return EdgeOp.EDGE_ALREADY_PRESENT if has_edge else EdgeOp.EDGE_ADDED
    if op == "remE":
        if not both:
            return EdgeOp.VERTEX_NOT_PRESENT
        return EdgeOp.EDGE_REMOVED if has_edge else EdgeOp.EDGE_NOT_PRESENT
    if op == "conE":
        if not both:
            return EdgeOp.VERTEX_NOT_PRESENT
        return EdgeOp.EDGE_PRESENT if has_edge else EdgeOp.VERTEX_OR_EDGE_NOT_PRESENT
    raise MalformedHistory(f"unknown op {op!r}")


class Verdict(enum.Enum):
    LINEARIZABLE = 0
    NOT_LINEARIZABLE = 1
    EXHAUSTED = 2


@dataclass
class CheckResult:
    verdict: Verdict
    witness: Optional[list]  # [(op_index, "taken"|"dropped", result)] in witness order
    nodes: int


def check(history: History, limit: int = 500_000) -> CheckResult:
    """Interval-respecting exhaustive search for a sequential witness.

    Pending operations are explored both as having taken effect and as
    never having run. Memoizes (abstract state, consumed-op mask).
    """
    ops = history.ops
    for o in ops:
        if not o.pending:
            o.result = _norm_result(o.op, o.result)
    n = len(ops)
    init = (frozenset(), frozenset())
    seen = set()
    nodes = 0
    hit_limit = False

    def eligible(remaining_mask):
        rem = [ops[i] for i in range(n) if remaining_mask & (1 << i)]
        if not rem:
            return []
        min_res = min((o.res_stamp for o in rem if not o.pending), default=None)
        if min_res is None:
            return rem
        return [o for o in rem if o.inv_stamp < min_res]

    def dfs(state, remaining_mask):
        nonlocal nodes, hit_limit
        if remaining_mask == 0:
            return []
        nodes += 1
        if nodes > limit:
            hit_limit = True
            return None
        key = (state[0], state[1], remaining_mask)
        if key in seen:
            return None
        for o in eligible(remaining_mask):
            next_mask = remaining_mask & ~(1 << o.index)
            if o.pending:
                # took effect with the canonical outcome
                res = _canonical(state, o.op, o.args)
                sub = dfs(_transition(state, o.op, o.args, res), next_mask)
                if sub is not None:
                    return [(o.index, "taken", res)] + sub
                if hit_limit:
                    return None
                # never ran
                sub = dfs(state, next_mask)
                if sub is not None:
                    return [(o.index, "dropped", None)] + sub
                if hit_limit:
                    return None
            else:
                if _consistent(state, o.op, o.args, o.result):
                    sub = dfs(_transition(state, o.op, o.args, o.result), next_mask)
                    if sub is not None:
                        return [(o.index, "taken", o.result)] + sub
                    if hit_limit:
                        return None
        seen.add(key)
        return None

    witness = dfs(init, (1 << n) - 1)
    if witness is not None:
        return CheckResult(Verdict.LINEARIZABLE, witness, nodes)
    if hit_limit:
        return CheckResult(Verdict.EXHAUSTED, None, nodes)
    return CheckResult(Verdict.NOT_LINEARIZABLE, None, nodes)


def replay_witness(history: History, witness) -> bool:
    """Soundness check: the witness order is consistent step by step."""
    state = (frozenset(), frozenset())
    for idx, disposition, res in witness:
        o = history.ops[idx]
        if disposition == "dropped":
            if not o.pending:
                return False
            continue
        r = res if o.pending else _norm_result(o.op, o.result)
        if not _consistent(state, o.op, o.args, r):
            return False
        state = _transition(state, o.op, o.args, r)
    return True


def main(argv=None):
    p = argparse.ArgumentParser(prog="lincheck", description="offline linearizability check")
    p.add_argument("--trace", required=True, help="line-delimited JSON event trace")
    p.add_argument("--limit", type=int, default=500_000, help="search node budget")
    args = p.parse_args(argv)
    try:
        history = History.load(args.trace)
    except MalformedHistory as e:
        print(f"malformed history: {e}", file=sys.stderr)
        return 2
    result = check(history, args.limit)
    print(f"{result.verdict.name} (nodes={result.nodes})")
    return {Verdict.LINEARIZABLE: 0, Verdict.NOT_LINEARIZABLE: 1, Verdict.EXHAUSTED: 2}[
        result.verdict
    ]


if __name__ == "__main__":
    sys.exit(main())
