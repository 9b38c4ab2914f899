"""Pure-Python backend: lock-free adjacency-list graph, wait-free helping
engine and the fast-path/slow-path facade.

Atomicity is emulated with per-cell locks (see marked_ref); the algorithms
themselves are the same as in the compiled backend. Deletion is two-step:
a CAS sets the mark bit on the victim's next cell (the decisive step), the
physical unlink is best-effort and otherwise happens during later traversals.

Two single-word consensus fields keep helpers, the fast path and readers
agreed on each operation's outcome:

* ``settled`` on nodes born on the slow path: PENDING until the insert's
  fate is decided, then LIVE (counted present) or VOID (never present).
  A node counts as present iff it is unmarked and LIVE; mutators that need
  a presence verdict on a PENDING node force the decision first, readers
  simply treat PENDING as absent.
* ``claim`` on deletion victims: removals are attributed to exactly one
  operation (a descriptor, or the fast-path token), so concurrent removers
  of the same node agree on the single winner.

Remove/find descriptors additionally agree on their victim through a
write-once ``victim`` cell (sealed when the operation concludes nothing is
there to remove), which pins completion values even for stalled helpers.
"""

from __future__ import annotations

import threading

from .codes import (
    EXHAUSTED,
    KEY_MAX,
    KEY_MIN,
    CapacityExceeded,
    EdgeOp,
    OpKind,
    PendingOperation,
    check_user_key,
)
from .marked_ref import AtomicMarkedCell, CasLog, pack, mark as mark_ref

# settle-word states
PENDING = 0
LIVE = 1
VOID_DUP = 2        # lost to an existing node with the same key
VOID_ENDPOINT = 3   # edge insert abandoned because an endpoint died

# claim / victim-seal tokens
FAST_CLAIM = object()
SEAL_ABSENT = object()
SEAL_VNP = object()
SEAL_ENP = object()

_PENDING_KINDS = frozenset(
    {
        OpKind.ADD_VERTEX,
        OpKind.REMOVE_VERTEX,
        OpKind.FIND_VERTEX,
        OpKind.ADD_EDGE,
        OpKind.REMOVE_EDGE,
        OpKind.FIND_EDGE,
    }
)


class _AtomicInt:
    __slots__ = ("_v", "_lock")

    def __init__(self, v=0):
        self._v = v
        self._lock = threading.Lock()

    def load(self):
        return self._v

    def add(self, d=1):
        with self._lock:
            self._v += d
            return self._v

    def cas(self, expected, new):
        with self._lock:
            if self._v != expected:
                return False
            self._v = new
            return True

    def max_update(self, v):
        with self._lock:
            if v > self._v:
                self._v = v


class _AtomicRef:
    """Single reference cell; CAS compares by identity."""

    __slots__ = ("_v", "_lock")

    def __init__(self, v=None):
        self._v = v
        self._lock = threading.Lock()

    def load(self):
        return self._v

    def store(self, v):
        self._v = v

    def cas(self, expected, new):
        with self._lock:
            if self._v is not expected:
                return False
            self._v = new
            return True


class ENode:
    __slots__ = ("key", "dest", "next", "settled", "claim")

    def __init__(self, key, dest=None, settled=LIVE, log=None):
        self.key = key
        self.dest = dest
        self.next = AtomicMarkedCell(pack(None, False), log)
        self.settled = _AtomicInt(settled)
        self.claim = _AtomicRef(None)


class VNode:
    __slots__ = ("key", "next", "edges_head", "edges_tail", "settled", "claim")

    def __init__(self, key, settled=LIVE, log=None, with_edges=True):
        self.key = key
        self.next = AtomicMarkedCell(pack(None, False), log)
        self.settled = _AtomicInt(settled)
        self.claim = _AtomicRef(None)
        if with_edges:
            self.edges_tail = ENode(KEY_MAX, None, LIVE, log)
            self.edges_head = ENode(KEY_MIN, None, LIVE, log)
            self.edges_head.next = AtomicMarkedCell(pack(self.edges_tail, False), log)
        else:
            self.edges_head = None
            self.edges_tail = None


def _force_settle(node, want):
    """CAS PENDING -> want; returns the final settled value either way."""
    node.settled.cas(PENDING, want)
    return node.settled.load()


def _vertex_live(v):
    return not v.next.load().marked and v.settled.load() == LIVE


class LockFreeGraph:
    """The lock-free fast path; also the structure the slow path operates on."""

    def __init__(self, cas_log=False):
        if cas_log and not isinstance(cas_log, CasLog):
            cas_log = CasLog()
        self._log = cas_log or None
        self._tail = VNode(KEY_MAX, LIVE, self._log)
        self._head = VNode(KEY_MIN, LIVE, self._log)
        self._head.next = AtomicMarkedCell(pack(self._tail, False), self._log)
        self.retired_vertices = _AtomicInt(0)
        self.retired_edges = _AtomicInt(0)
        self._inject = _AtomicInt(0)

    # -- test hooks -------------------------------------------------------

    def inject_cas_failures(self, n: int) -> None:
        """Make the next n decisive CAS attempts fail artificially."""
        self._inject.add(n)

    def _take_injected_failure(self) -> bool:
        while True:
            n = self._inject.load()
            if n <= 0:
                return False
            if self._inject.cas(n, n - 1):
                return True

    # -- traversal --------------------------------------------------------

    def _locate_v(self, key):
        """Window (pred, curr) with curr.key >= key; unlinks dead vertices.

        Dead = marked, or VOID (an abandoned slow-path insert). VOID nodes
        are marked first so stale inserts behind them fail on the mark bit.
        """
        head = self._head
        while True:
            pred = head
            curr = pred.next.load().target
            restart = False
            while True:
                cw = curr.next.load()
                if cw.marked or curr.settled.load() >= VOID_DUP:
                    if not cw.marked:
                        curr.next.cas(cw, mark_ref(cw))
                        continue
                    if not pred.next.cas(pack(curr, False), pack(cw.target, False)):
                        restart = True
                        break
                    self.retired_vertices.add(1)
                    curr = cw.target
                    continue
                if curr.key >= key:
                    return pred, curr
                pred, curr = curr, cw.target
            if restart:
                continue

    def _locate_e(self, v, key):
        """Window in v's edge list; unlinks marked, VOID and dead-destination edges."""
        head = v.edges_head
        while True:
            pred = head
            curr = pred.next.load().target
            restart = False
            while True:
                cw = curr.next.load()
                dest = curr.dest
                dead = (
                    cw.marked
                    or curr.settled.load() >= VOID_DUP
                    or (dest is not None
                        and (dest.next.load().marked or dest.settled.load() >= VOID_DUP))
                )
                if dead:
                    if not cw.marked:
                        curr.next.cas(cw, mark_ref(cw))
                        continue
                    if not pred.next.cas(pack(curr, False), pack(cw.target, False)):
                        restart = True
                        break
                    self.retired_edges.add(1)
                    curr = cw.target
                    continue
                if curr.key >= key:
                    return pred, curr
                pred, curr = curr, cw.target
            if restart:
                continue

    def _find_v(self, key):
        """Read-only walk; returns the first node with key >= search key."""
        curr = self._head
        while curr.key < key:
            curr = curr.next.load().target
        return curr

    def _locate_two(self, key1, key2):
        """Validate both endpoints in one read-only pass; (v1, v2, ok)."""
        lo, hi = (key1, key2) if key1 < key2 else (key2, key1)
        n = self._find_v(lo)
        if n.key != lo or not _vertex_live(n):
            return None, None, False
        v_lo = n
        while n.key < hi:
            n = n.next.load().target
        if n.key != hi or not _vertex_live(n):
            return None, None, False
        if key1 < key2:
            return v_lo, n, True
        return n, v_lo, True

    # -- vertex operations --------------------------------------------------

    def add_vertex(self, key, budget=None):
        if not check_user_key(key):
            return False
        fails = 0
        node = None
        while True:
            pred, curr = self._locate_v(key)
            if curr.key == key:
                st = _force_settle(curr, LIVE)
                if st == LIVE:
                    return False
                continue  # abandoned ghost; cleaned on the next pass
            if node is None:
                node = VNode(key, LIVE, self._log)
            node.next = AtomicMarkedCell(pack(curr, False), self._log)
            if not self._take_injected_failure() and pred.next.cas(
                pack(curr, False), pack(node, False)
            ):
                return True
            fails += 1
            if budget is not None and fails >= budget:
                return EXHAUSTED

    def remove_vertex(self, key, budget=None):
        if not check_user_key(key):
            return False
        fails = 0
        while True:
            pred, curr = self._locate_v(key)
            if curr.key != key:
                return False
            if _force_settle(curr, LIVE) != LIVE:
                continue
            cw = curr.next.load()
            if cw.marked:
                return False
            if not self._take_injected_failure() and curr.next.cas(cw, mark_ref(cw)):
                mine = curr.claim.cas(None, FAST_CLAIM)
                if pred.next.cas(pack(curr, False), pack(cw.target, False)):
                    self.retired_vertices.add(1)
                return mine
            fails += 1
            if budget is not None and fails >= budget:
                return EXHAUSTED

    def contains_vertex(self, key):
        if not check_user_key(key):
            return False
        n = self._find_v(key)
        return n.key == key and _vertex_live(n)

    # -- edge operations ----------------------------------------------------

    def add_edge(self, key1, key2, budget=None):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        fails = 0
        node = None
        while True:
            v1, v2, ok = self._locate_two(key1, key2)
            if not ok:
                return EdgeOp.VERTEX_NOT_PRESENT
            pred, curr = self._locate_e(v1, key2)
            if curr.key == key2:
                if _force_settle(curr, LIVE) == LIVE:
                    return EdgeOp.EDGE_ALREADY_PRESENT
                continue
            if node is None:
                node = ENode(key2, v2, LIVE, self._log)
            node.dest = v2
            node.next = AtomicMarkedCell(pack(curr, False), self._log)
            if not self._take_injected_failure() and pred.next.cas(
                pack(curr, False), pack(node, False)
            ):
                return EdgeOp.EDGE_ADDED
            fails += 1
            if budget is not None and fails >= budget:
                return EXHAUSTED

    def remove_edge(self, key1, key2, budget=None):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        fails = 0
        while True:
            v1, v2, ok = self._locate_two(key1, key2)
            if not ok:
                return EdgeOp.VERTEX_NOT_PRESENT
            pred, curr = self._locate_e(v1, key2)
            if curr.key != key2:
                return EdgeOp.EDGE_NOT_PRESENT
            if _force_settle(curr, LIVE) != LIVE:
                continue
            cw = curr.next.load()
            if cw.marked:
                return EdgeOp.EDGE_NOT_PRESENT
            if not self._take_injected_failure() and curr.next.cas(cw, mark_ref(cw)):
                mine = curr.claim.cas(None, FAST_CLAIM)
                if pred.next.cas(pack(curr, False), pack(cw.target, False)):
                    self.retired_edges.add(1)
                return EdgeOp.EDGE_REMOVED if mine else EdgeOp.EDGE_NOT_PRESENT
            fails += 1
            if budget is not None and fails >= budget:
                return EXHAUSTED

    def contains_edge(self, key1, key2):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        v1, v2, ok = self._locate_two(key1, key2)
        if not ok:
            return EdgeOp.VERTEX_NOT_PRESENT
        e = v1.edges_head
        while e.key < key2:
            e = e.next.load().target
        dest = e.dest
        present = (
            e.key == key2
            and not e.next.load().marked
            and e.settled.load() == LIVE
            and dest is not None
            and _vertex_live(dest)
            and _vertex_live(v1)
        )
        return EdgeOp.EDGE_PRESENT if present else EdgeOp.VERTEX_OR_EDGE_NOT_PRESENT

    # -- introspection ------------------------------------------------------

    def snapshot(self):
        """Logical (vertices, edges) sets: unmarked LIVE nodes only."""
        verts = set()
        edges = set()
        v = self._head.next.load().target
        while v.key < KEY_MAX:
            if _vertex_live(v):
                verts.add(v.key)
                e = v.edges_head.next.load().target
                while e.key < KEY_MAX:
                    if (
                        not e.next.load().marked
                        and e.settled.load() == LIVE
                        and e.dest is not None
                        and _vertex_live(e.dest)
                    ):
                        edges.add((v.key, e.key))
                    e = e.next.load().target
            v = v.next.load().target
        return verts, edges

    def _purge(self):
        """Run the cleanup traversal over the whole structure."""
        self._locate_v(KEY_MAX - 1)
        v = self._head.next.load().target
        while v.key < KEY_MAX:
            if not v.next.load().marked and v.settled.load() == LIVE:
                self._locate_e(v, KEY_MAX - 1)
            v = v.next.load().target

    def check_invariants(self, purge=True):
        """Full physical walk; returns a list of violation strings (empty = ok)."""
        problems = []
        if purge:
            self._purge()
        seen_live = set()
        prev_key = None
        v = self._head
        while True:
            if prev_key is not None and v.key <= prev_key:
                problems.append(f"vertex chain not sorted at {v.key}")
                break
            prev_key = v.key
            live = _vertex_live(v)
            if live and KEY_MIN < v.key < KEY_MAX:
                if v.key in seen_live:
                    problems.append(f"duplicate live vertex {v.key}")
                seen_live.add(v.key)
            if v.edges_head is not None:
                eprev = None
                e = v.edges_head
                eseen = set()
                while True:
                    if eprev is not None and e.key <= eprev:
                        problems.append(f"edge chain not sorted at {v.key}->{e.key}")
                        break
                    eprev = e.key
                    elive = not e.next.load().marked and e.settled.load() == LIVE
                    if elive and KEY_MIN < e.key < KEY_MAX:
                        if e.key in eseen:
                            problems.append(f"duplicate live edge {v.key}->{e.key}")
                        eseen.add(e.key)
                        d = e.dest
                        if d is None:
                            problems.append(f"live edge {v.key}->{e.key} without destination")
                        elif live and purge and (d.next.load().marked or d.settled.load() != LIVE):
                            problems.append(
                                f"live edge {v.key}->{e.key} to dead vertex after purge"
                            )
                    nxt = e.next.load().target
                    if nxt is None:
                        break
                    e = nxt
            nxt = v.next.load().target
            if nxt is None:
                break
            v = nxt
        return problems

    def stats(self):
        return {
            "retired_vertices": self.retired_vertices.load(),
            "retired_edges": self.retired_edges.load(),
        }

    def _force_mark_vertex(self, key):
        """Debug hook: mark without unlink/claim (simulates in-flight removal)."""
        n = self._find_v(key)
        if n.key != key or n.next.load().marked:
            return False
        n.next.set_mark()
        return True

    def _force_mark_edge(self, key1, key2):
        n = self._find_v(key1)
        if n.key != key1 or n.edges_head is None:
            return False
        e = n.edges_head
        while e.key < key2:
            e = e.next.load().target
        if e.key != key2 or e.next.load().marked:
            return False
        e.next.set_mark()
        return True

    def _vertex_chain(self):
        """Physical vertex chain as (key, marked, settled) including sentinels."""
        out = []
        v = self._head
        while v is not None:
            out.append((v.key, v.next.load().marked, v.settled.load()))
            v = v.next.load().target
        return out

    def _edge_chain(self, key):
        v = self._find_v(key)
        if v.key != key or v.edges_head is None:
            return None
        out = []
        e = v.edges_head
        while e is not None:
            dest = e.dest
            dk = None if dest is None else dest.key
            dead_dest = dest is not None and (
                dest.next.load().marked or dest.settled.load() != LIVE
            )
            out.append((e.key, e.next.load().marked, e.settled.load(), dk, dead_dest))
            e = e.next.load().target
        return out

    def cas_log_entries(self):
        """Normalized (cell_id, old_target, old_mark, new_target, new_mark) tuples."""
        if self._log is None:
            return []
        out = []
        for cid, old, new in self._log.entries:
            out.append(
                (
                    cid,
                    0 if old.target is None else id(old.target),
                    old.marked,
                    0 if new.target is None else id(new.target),
                    new.marked,
                )
            )
        return out

    def cas_log_overflowed(self):
        return False


class OpDesc:
    """Operation descriptor published in the shared state array.

    Identity fields are fixed at publication; ``victim`` is a write-once
    consensus cell used by remove/find helpers, never reinterpreted after
    the descriptor is replaced by its completion.
    """

    __slots__ = ("phase", "kind", "vnode", "enode", "src", "dst", "result", "victim")

    def __init__(self, phase, kind, vnode=None, enode=None, src=None, dst=None, result=None):
        self.phase = phase
        self.kind = kind
        self.vnode = vnode
        self.enode = enode
        self.src = src
        self.dst = dst
        self.result = result
        self.victim = _AtomicRef(None)


class WaitFreeEngine:
    """Slow path: phase counter, per-thread descriptor slots, helping procedures."""

    def __init__(
        self,
        capacity,
        graph: LockFreeGraph | None = None,
        helped_lookups=True,
        cas_log: CasLog | None = None,
        log_completions=False,
        track_steps=False,
    ):
        self.graph = graph if graph is not None else LockFreeGraph(cas_log)
        self.capacity = capacity
        self.helped_lookups = helped_lookups
        self._registered = _AtomicInt(0)
        self._phase = _AtomicInt(0)
        self._slots = [
            _AtomicRef(OpDesc(0, OpKind.DONE_OK, result=1)) for _ in range(capacity)
        ]
        self._tls = threading.local()
        self.completion_log = [] if log_completions else None
        self._track_steps = track_steps
        self._max_rounds = _AtomicInt(0)
        self._won = _AtomicInt(0)
        self._lost = _AtomicInt(0)

    # -- registry / phases --------------------------------------------------

    def register_thread(self):
        n = self._registered.add(1)
        if n > self.capacity:
            raise CapacityExceeded(f"capacity {self.capacity} exceeded")
        tid = n - 1
        self._tls.slot = tid
        return tid

    def _my_slot(self):
        tid = getattr(self._tls, "slot", None)
        if tid is None:
            tid = self.register_thread()
        return tid

    def next_phase(self):
        return self._phase.add(1)

    def current_phase(self):
        return self._phase.load()

    def publish(self, tid, desc):
        cur = self._slots[tid].load()
        if cur.kind in _PENDING_KINDS:
            raise PendingOperation(f"slot {tid} already has a pending operation")
        self._slots[tid].store(desc)

    def slot_info(self, tid):
        d = self._slots[tid].load()
        return d.kind, d.phase, d.result

    # -- completion ---------------------------------------------------------

    def _complete(self, tid, desc, ok, result):
        done = OpDesc(
            desc.phase,
            OpKind.DONE_OK if ok else OpKind.DONE_FAIL,
            vnode=desc.vnode,
            enode=desc.enode,
            result=result,
        )
        won = self._slots[tid].cas(desc, done)
        (self._won if won else self._lost).add(1)
        if self.completion_log is not None:
            self.completion_log.append((tid, desc.phase, desc.kind, bool(ok), result, won))
        return won

    @property
    def max_help_rounds(self):
        return self._max_rounds.load()

    def completion_stats(self):
        return {"won": self._won.load(), "lost": self._lost.load()}

    def _note_rounds(self, n):
        if self._track_steps:
            self._max_rounds.max_update(n)

    # -- dispatcher ---------------------------------------------------------

    def help_graph_ds(self, phase):
        for tid in range(self.capacity):
            d = self._slots[tid].load()
            if d.phase > phase:
                continue
            kind = d.kind
            if kind == OpKind.ADD_VERTEX:
                self._help_add_v(tid, d.phase)
            elif kind == OpKind.REMOVE_VERTEX:
                self._help_rem_v(tid, d.phase)
            elif kind == OpKind.FIND_VERTEX:
                self._help_con_v(tid, d.phase)
            elif kind == OpKind.ADD_EDGE:
                self._help_add_e(tid, d.phase)
            elif kind == OpKind.REMOVE_EDGE:
                self._help_rem_e(tid, d.phase)
            elif kind == OpKind.FIND_EDGE:
                self._help_con_e(tid, d.phase)

    def _slot_matches(self, tid, phase, kind):
        d = self._slots[tid].load()
        if d.phase != phase or d.kind != kind:
            return None
        return d

    # -- vertex helpers -----------------------------------------------------

    def _help_add_v(self, tid, phase):
        g = self.graph
        rounds = 0
        while True:
            rounds += 1
            d = self._slot_matches(tid, phase, OpKind.ADD_VERTEX)
            if d is None:
                self._note_rounds(rounds)
                return
            n = d.vnode
            nv0 = n.next.load()
            pred, curr = g._locate_v(n.key)
            st = n.settled.load()
            if st >= VOID_DUP:
                self._complete(tid, d, False, 0)
                continue
            if curr is n:
                if _force_settle(n, LIVE) == LIVE:
                    self._complete(tid, d, True, 1)
                else:
                    n.next.set_mark()
                    self._complete(tid, d, False, 0)
                continue
            if n.next.load().marked:
                # only reachable nodes get marked, so n was linked; settle the
                # verdict (no-op unless still PENDING) and report accordingly
                if _force_settle(n, LIVE) == LIVE:
                    self._complete(tid, d, True, 1)
                else:
                    self._complete(tid, d, False, 0)
                continue
            if curr.key == n.key:
                if _force_settle(curr, LIVE) == LIVE:
                    if _force_settle(n, VOID_DUP) >= VOID_DUP:
                        self._complete(tid, d, False, 0)
                # curr VOID: cleaned next pass; n LIVE: linked meanwhile
                continue
            if nv0.marked:
                continue
            # stage the agreed successor in n itself, then link
            if n.next.cas(nv0, pack(curr, False)):
                if pred.next.cas(pack(curr, False), pack(n, False)):
                    if _force_settle(n, LIVE) == LIVE:
                        self._complete(tid, d, True, 1)
                    else:
                        n.next.set_mark()
                        self._complete(tid, d, False, 0)
                    continue

    def _help_rem_v(self, tid, phase):
        g = self.graph
        rounds = 0
        while True:
            rounds += 1
            d = self._slot_matches(tid, phase, OpKind.REMOVE_VERTEX)
            if d is None:
                self._note_rounds(rounds)
                return
            key = d.vnode.key
            vic = d.victim.load()
            if vic is SEAL_ABSENT:
                self._complete(tid, d, False, 0)
                continue
            if vic is None:
                pred, curr = g._locate_v(key)
                if curr.key != key:
                    d.victim.cas(None, SEAL_ABSENT)
                    continue
                if _force_settle(curr, LIVE) != LIVE:
                    continue
                d.victim.cas(None, curr)
                continue
            v = vic
            v.claim.cas(None, d)
            owner = v.claim.load()
            v.next.set_mark()
            pred, curr = g._locate_v(key)  # best-effort physical unlink
            if owner is d:
                self._complete(tid, d, True, 1)
            else:
                self._complete(tid, d, False, 0)
            continue

    def _help_con_v(self, tid, phase):
        d = self._slot_matches(tid, phase, OpKind.FIND_VERTEX)
        if d is None:
            return
        found = self.graph.contains_vertex(d.vnode.key)
        self._complete(tid, d, found, 1 if found else 0)

    # -- edge helpers -------------------------------------------------------

    def _help_add_e(self, tid, phase):
        g = self.graph
        rounds = 0
        while True:
            rounds += 1
            d = self._slot_matches(tid, phase, OpKind.ADD_EDGE)
            if d is None:
                self._note_rounds(rounds)
                return
            n = d.enode
            vs, vd = d.src, d.dst
            nv0 = n.next.load()
            st = n.settled.load()
            if st == VOID_DUP:
                self._complete(tid, d, False, int(EdgeOp.EDGE_ALREADY_PRESENT))
                continue
            if st == VOID_ENDPOINT:
                self._complete(tid, d, False, int(EdgeOp.VERTEX_NOT_PRESENT))
                continue
            if n.next.load().marked:
                # linked, then marked: by a remover (LIVE), a zombie neutralise
                # (VOID) or cleanup of a still-PENDING edge whose destination
                # died; settle the verdict before reporting
                st = _force_settle(n, LIVE)
                if st == LIVE:
                    self._complete(tid, d, True, int(EdgeOp.EDGE_ADDED))
                elif st == VOID_DUP:
                    self._complete(tid, d, False, int(EdgeOp.EDGE_ALREADY_PRESENT))
                else:
                    self._complete(tid, d, False, int(EdgeOp.VERTEX_NOT_PRESENT))
                continue
            # endpoint liveness is re-checked on the captured nodes each round
            if vs.next.load().marked or vd.next.load().marked:
                st = _force_settle(n, VOID_ENDPOINT)
                if st == VOID_ENDPOINT:
                    self._complete(tid, d, False, int(EdgeOp.VERTEX_NOT_PRESENT))
                elif st == VOID_DUP:
                    self._complete(tid, d, False, int(EdgeOp.EDGE_ALREADY_PRESENT))
                continue
            pred, curr = g._locate_e(vs, n.key)
            if curr is n:
                if _force_settle(n, LIVE) == LIVE:
                    self._complete(tid, d, True, int(EdgeOp.EDGE_ADDED))
                else:
                    n.next.set_mark()
                    # settle reason decides the reported failure
                    code = (
                        EdgeOp.EDGE_ALREADY_PRESENT
                        if n.settled.load() == VOID_DUP
                        else EdgeOp.VERTEX_NOT_PRESENT
                    )
                    self._complete(tid, d, False, int(code))
                continue
            if curr.key == n.key:
                if _force_settle(curr, LIVE) == LIVE:
                    st = _force_settle(n, VOID_DUP)
                    if st == VOID_DUP:
                        self._complete(tid, d, False, int(EdgeOp.EDGE_ALREADY_PRESENT))
                    elif st == VOID_ENDPOINT:
                        self._complete(tid, d, False, int(EdgeOp.VERTEX_NOT_PRESENT))
                continue
            if nv0.marked:
                continue
            if n.next.cas(nv0, pack(curr, False)):
                if pred.next.cas(pack(curr, False), pack(n, False)):
                    if _force_settle(n, LIVE) == LIVE:
                        self._complete(tid, d, True, int(EdgeOp.EDGE_ADDED))
                    else:
                        n.next.set_mark()
                        code = (
                            EdgeOp.EDGE_ALREADY_PRESENT
                            if n.settled.load() == VOID_DUP
                            else EdgeOp.VERTEX_NOT_PRESENT
                        )
                        self._complete(tid, d, False, int(code))
                    continue

    def _help_rem_e(self, tid, phase):
        g = self.graph
        rounds = 0
        while True:
            rounds += 1
            d = self._slot_matches(tid, phase, OpKind.REMOVE_EDGE)
            if d is None:
                self._note_rounds(rounds)
                return
            key2 = d.enode.key
            vs, vd = d.src, d.dst
            vic = d.victim.load()
            if vic is SEAL_VNP:
                self._complete(tid, d, False, int(EdgeOp.VERTEX_NOT_PRESENT))
                continue
            if vic is SEAL_ENP:
                self._complete(tid, d, False, int(EdgeOp.EDGE_NOT_PRESENT))
                continue
            if vic is None:
                if vs.next.load().marked or vd.next.load().marked:
                    d.victim.cas(None, SEAL_VNP)
                    continue
                pred, curr = g._locate_e(vs, key2)
                if curr.key != key2:
                    d.victim.cas(None, SEAL_ENP)
                    continue
                if _force_settle(curr, LIVE) != LIVE:
                    continue
                d.victim.cas(None, curr)
                continue
            e = vic
            e.claim.cas(None, d)
            owner = e.claim.load()
            e.next.set_mark()
            g._locate_e(vs, key2)  # best-effort unlink
            if owner is d:
                self._complete(tid, d, True, int(EdgeOp.EDGE_REMOVED))
            else:
                self._complete(tid, d, False, int(EdgeOp.EDGE_NOT_PRESENT))
            continue

    def _help_con_e(self, tid, phase):
        d = self._slot_matches(tid, phase, OpKind.FIND_EDGE)
        if d is None:
            return
        vs, vd = d.src, d.dst
        key2 = d.enode.key
        e = vs.edges_head
        while e.key < key2:
            e = e.next.load().target
        dest = e.dest
        present = (
            e.key == key2
            and not e.next.load().marked
            and e.settled.load() == LIVE
            and dest is not None
            and _vertex_live(dest)
            and _vertex_live(vs)
        )
        code = EdgeOp.EDGE_PRESENT if present else EdgeOp.VERTEX_OR_EDGE_NOT_PRESENT
        self._complete(tid, d, present, int(code))

    # -- public wait-free operations -----------------------------------------

    def _run(self, tid, desc):
        self.publish(tid, desc)
        self.help_graph_ds(desc.phase)
        kind, phase, result = self.slot_info(tid)
        assert phase == desc.phase and kind in (OpKind.DONE_OK, OpKind.DONE_FAIL)
        return result

    def wf_add_vertex(self, key):
        if not check_user_key(key):
            return False
        tid = self._my_slot()
        phase = self.next_phase()
        node = VNode(key, PENDING, self.graph._log)
        return self._run(tid, OpDesc(phase, OpKind.ADD_VERTEX, vnode=node)) == 1

    def wf_remove_vertex(self, key):
        if not check_user_key(key):
            return False
        tid = self._my_slot()
        phase = self.next_phase()
        carrier = VNode(key, PENDING, None, with_edges=False)
        return self._run(tid, OpDesc(phase, OpKind.REMOVE_VERTEX, vnode=carrier)) == 1

    def wf_contains_vertex(self, key):
        if not check_user_key(key):
            return False
        if not self.helped_lookups:
            return self.graph.contains_vertex(key)
        tid = self._my_slot()
        phase = self.next_phase()
        carrier = VNode(key, PENDING, None, with_edges=False)
        return self._run(tid, OpDesc(phase, OpKind.FIND_VERTEX, vnode=carrier)) == 1

    def wf_add_edge(self, key1, key2):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        v1, v2, ok = self.graph._locate_two(key1, key2)
        if not ok:
            return EdgeOp.VERTEX_NOT_PRESENT
        tid = self._my_slot()
        phase = self.next_phase()
        node = ENode(key2, v2, PENDING, self.graph._log)
        return EdgeOp(
            self._run(tid, OpDesc(phase, OpKind.ADD_EDGE, enode=node, src=v1, dst=v2))
        )

    def wf_remove_edge(self, key1, key2):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        v1, v2, ok = self.graph._locate_two(key1, key2)
        if not ok:
            return EdgeOp.VERTEX_NOT_PRESENT
        tid = self._my_slot()
        phase = self.next_phase()
        carrier = ENode(key2, v2, PENDING)
        return EdgeOp(
            self._run(tid, OpDesc(phase, OpKind.REMOVE_EDGE, enode=carrier, src=v1, dst=v2))
        )

    def wf_contains_edge(self, key1, key2):
        if key1 == key2 or not (check_user_key(key1) and check_user_key(key2)):
            return EdgeOp.VERTEX_NOT_PRESENT
        if not self.helped_lookups:
            return self.graph.contains_edge(key1, key2)
        v1, v2, ok = self.graph._locate_two(key1, key2)
        if not ok:
            return EdgeOp.VERTEX_NOT_PRESENT
        tid = self._my_slot()
        phase = self.next_phase()
        carrier = ENode(key2, v2, PENDING)
        return EdgeOp(
            self._run(tid, OpDesc(phase, OpKind.FIND_EDGE, enode=carrier, src=v1, dst=v2))
        )

    # -- stall-test hooks -----------------------------------------------------

    def publish_pending(self, tid, kind, key1, key2=None):
        """Publish an operation without helping it; returns its phase.

        Edge operations validate endpoints first, mirroring the public ops;
        returns (None, early_result) if validation fails before publication.
        """
        kind = OpKind(kind)
        phase = self.next_phase()
        if kind in (OpKind.ADD_VERTEX, OpKind.REMOVE_VERTEX, OpKind.FIND_VERTEX):
            if kind == OpKind.ADD_VERTEX:
                node = VNode(key1, PENDING, self.graph._log)
            else:
                node = VNode(key1, PENDING, None, with_edges=False)
            self.publish(tid, OpDesc(phase, kind, vnode=node))
            return phase, None
        v1, v2, ok = self.graph._locate_two(key1, key2)
        if not ok:
            return None, EdgeOp.VERTEX_NOT_PRESENT
        settled = PENDING
        node = ENode(key2, v2, settled, self.graph._log)
        self.publish(tid, OpDesc(phase, kind, enode=node, src=v1, dst=v2))
        return phase, None


class FpspGraph:
    """Fast-path/slow-path facade: bounded lock-free attempts, wait-free fallback."""

    def __init__(
        self,
        capacity,
        max_fail=20,
        help_before_fast=True,
        helped_lookups=False,
        cas_log: CasLog | None = None,
    ):
        if max_fail < 1:
            raise ValueError("max_fail must be >= 1")
        self.engine = WaitFreeEngine(capacity, helped_lookups=helped_lookups, cas_log=cas_log)
        self.graph = self.engine.graph
        self.max_fail = max_fail
        self.help_before_fast = help_before_fast
        self._slow = {k: _AtomicInt(0) for k in _PENDING_KINDS}

    def register_thread(self):
        return self.engine.register_thread()

    def _pre(self):
        if self.help_before_fast:
            self.engine.help_graph_ds(self.engine.current_phase())

    def add_vertex(self, key):
        self._pre()
        r = self.graph.add_vertex(key, self.max_fail)
        if r is not EXHAUSTED:
            return r
        self._slow[OpKind.ADD_VERTEX].add(1)
        return self.engine.wf_add_vertex(key)

    def remove_vertex(self, key):
        self._pre()
        r = self.graph.remove_vertex(key, self.max_fail)
        if r is not EXHAUSTED:
            return r
        self._slow[OpKind.REMOVE_VERTEX].add(1)
        return self.engine.wf_remove_vertex(key)

    def contains_vertex(self, key):
        self._pre()
        return self.engine.wf_contains_vertex(key)

    def add_edge(self, key1, key2):
        self._pre()
        r = self.graph.add_edge(key1, key2, self.max_fail)
        if r is not EXHAUSTED:
            return r
        self._slow[OpKind.ADD_EDGE].add(1)
        return self.engine.wf_add_edge(key1, key2)

    def remove_edge(self, key1, key2):
        self._pre()
        r = self.graph.remove_edge(key1, key2, self.max_fail)
        if r is not EXHAUSTED:
            return r
        self._slow[OpKind.REMOVE_EDGE].add(1)
        return self.engine.wf_remove_edge(key1, key2)

    def contains_edge(self, key1, key2):
        self._pre()
        return self.engine.wf_contains_edge(key1, key2)

    def stats(self):
        per_op = {OpKind(k).name: v.load() for k, v in self._slow.items()}
        per_op["total"] = sum(v.load() for v in self._slow.values())
        return per_op

    def slowpath_entries(self):
        return sum(v.load() for v in self._slow.values())
