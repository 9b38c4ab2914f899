# cython: language_level=3
# distutils: language = c++
"""Compiled backend: thin wrappers over the C++ kernels in _kernel.hpp.

Operations release the GIL, so threads race for real; the Python layer only
marshals arguments and keeps wrapper objects alive in dependency order.
API-compatible with the pure backend in pure.py.
"""

import threading

from libc.stdint cimport int64_t, uint64_t, uintptr_t

from .codes import (
    EXHAUSTED,
    CapacityExceeded,
    EdgeOp,
    OpKind,
    PendingOperation,
    KEY_MAX,
    KEY_MIN,
)


cdef extern from "_kernel.hpp" namespace "wfg" nogil:
    cdef cppclass Graph:
        pass
    cdef cppclass VNode:
        pass
    cdef cppclass ENode:
        pass
    cdef cppclass Engine:
        pass
    cdef cppclass Fpsp:
        pass
    cdef cppclass Coarse:
        pass
    cdef cppclass BenchCtl:
        pass
    cdef cppclass TestCell:
        pass

    Graph* graph_create(size_t log_cap)
    void graph_destroy(Graph* g)
    int add_vertex(Graph* g, int64_t key, int64_t budget)
    int remove_vertex(Graph* g, int64_t key, int64_t budget)
    int contains_vertex(Graph* g, int64_t key)
    int add_edge(Graph* g, int64_t k1, int64_t k2, int64_t budget)
    int remove_edge(Graph* g, int64_t k1, int64_t k2, int64_t budget)
    int contains_edge(Graph* g, int64_t k1, int64_t k2)

    VNode* g_head(Graph* g)
    VNode* v_next(VNode* v)
    bint v_marked(VNode* v)
    int v_settled(VNode* v)
    int64_t v_key(VNode* v)
    bint v_claimed(VNode* v)
    ENode* v_ehead(VNode* v)
    ENode* e_next(ENode* e)
    bint e_marked(ENode* e)
    int e_settled(ENode* e)
    int64_t e_key(ENode* e)
    VNode* e_dest(ENode* e)

    uint64_t g_retired_v(Graph* g)
    uint64_t g_retired_e(Graph* g)
    void g_inject(Graph* g, int64_t n)
    size_t log_count(Graph* g)
    int log_overflow(Graph* g)
    void log_entry(Graph* g, size_t i, uintptr_t* cell, uintptr_t* oldv, uintptr_t* newv)
    void purge(Graph* g)
    int dbg_mark_vertex(Graph* g, int64_t key)
    int dbg_mark_edge(Graph* g, int64_t k1, int64_t k2)

    Engine* engine_create(Graph* g, int capacity, bint helped_lookups, bint track_steps)
    void engine_destroy(Engine* e)
    uint64_t next_phase(Engine* e)
    void help_all(Engine* e, uint64_t phase)
    int eng_register(Engine* e)
    uint64_t eng_phase(Engine* e)
    int slot_kind(Engine* e, int tid)
    uint64_t slot_phase(Engine* e, int tid)
    int slot_result(Engine* e, int tid)
    uint64_t eng_max_rounds(Engine* e)
    uint64_t eng_completions_won(Engine* e)
    uint64_t eng_completions_lost(Engine* e)
    uint64_t publish_vertex_op(Engine* e, int tid, int kind, int64_t key)
    uint64_t publish_edge_op(Engine* e, int tid, int kind, int64_t k1, int64_t k2)
    int wf_add_vertex(Engine* e, int tid, int64_t key)
    int wf_remove_vertex(Engine* e, int tid, int64_t key)
    int wf_contains_vertex(Engine* e, int tid, int64_t key)
    int wf_add_edge(Engine* e, int tid, int64_t k1, int64_t k2)
    int wf_remove_edge(Engine* e, int tid, int64_t k1, int64_t k2)
    int wf_contains_edge(Engine* e, int tid, int64_t k1, int64_t k2)

    Fpsp* fpsp_create(Engine* eng, int64_t max_fail, bint help_before_fast)
    void fpsp_destroy(Fpsp* f)
    int fpsp_add_vertex(Fpsp* f, int tid, int64_t key)
    int fpsp_remove_vertex(Fpsp* f, int tid, int64_t key)
    int fpsp_contains_vertex(Fpsp* f, int tid, int64_t key)
    int fpsp_add_edge(Fpsp* f, int tid, int64_t k1, int64_t k2)
    int fpsp_remove_edge(Fpsp* f, int tid, int64_t k1, int64_t k2)
    int fpsp_contains_edge(Fpsp* f, int tid, int64_t k1, int64_t k2)
    uint64_t fpsp_slow_total(Fpsp* f)
    uint64_t fpsp_slow_for(Fpsp* f, int kind)

    Coarse* coarse_create()
    void coarse_destroy(Coarse* c)
    int coarse_add_vertex(Coarse* c, int64_t k)
    int coarse_remove_vertex(Coarse* c, int64_t k)
    int coarse_contains_vertex(Coarse* c, int64_t k)
    int coarse_add_edge(Coarse* c, int64_t a, int64_t b)
    int coarse_remove_edge(Coarse* c, int64_t a, int64_t b)
    int coarse_contains_edge(Coarse* c, int64_t a, int64_t b)

    uint64_t bench_worker(int impl, Graph* g, Engine* eng, Fpsp* f, Coarse* co, int tid,
                          BenchCtl* ctl, uint64_t seed, const uint64_t* cdf, int64_t key_max)

    TestCell* cell_create(uintptr_t init)
    void cell_destroy(TestCell* c)
    uintptr_t cell_load(TestCell* c)
    bint cell_cas(TestCell* c, uintptr_t e, uintptr_t n)


cdef int IMPL_LOCKFREE = 0
cdef int IMPL_WF = 1
cdef int IMPL_FPSP = 2
cdef int IMPL_COARSE = 3

RES_EXHAUSTED = -1
RES_BAD_PUBLISH = -2

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


cdef extern from *:
    """
    namespace wfg { inline void ctl_stop(BenchCtl* c){ c->stop.store(1); } }
    """
    void _ctl_stop "wfg::ctl_stop" (BenchCtl* c) nogil


cdef class BenchControl:
    """Shared stop flag for bench worker loops."""

    cdef BenchCtl* ctl

    def __cinit__(self):
        self.ctl = new BenchCtl()

    def __dealloc__(self):
        del self.ctl

    def stop(self):
        _ctl_stop(self.ctl)


cdef class CasCell:
    """Single-word packed (target, mark) cell; targets are even integers."""

    cdef TestCell* c

    def __cinit__(self, target=0, marked=False):
        self.c = cell_create(self._pack(target, marked))

    def __dealloc__(self):
        cell_destroy(self.c)

    @staticmethod
    def _pack(target, marked):
        t = int(target)
        if t & 1:
            raise ValueError("targets must be even (low bit carries the mark)")
        return t | (1 if marked else 0)

    def load(self):
        cdef uintptr_t w = cell_load(self.c)
        return (w & ~<uintptr_t>1, bool(w & 1))

    def cas(self, exp_target, exp_marked, new_target, new_marked):
        return bool(
            cell_cas(self.c, self._pack(exp_target, exp_marked), self._pack(new_target, new_marked))
        )


cdef _edge_result(int r):
    if r == RES_EXHAUSTED:
        return EXHAUSTED
    return EdgeOp(r)


cdef _bool_result(int r):
    if r == RES_EXHAUSTED:
        return EXHAUSTED
    return bool(r)


cdef class LockFreeGraph:
    """Compiled lock-free adjacency-list graph (fast path)."""

    cdef Graph* g
    cdef readonly object cas_log_enabled

    def __cinit__(self, cas_log=False, size_t cas_log_capacity=1_000_000):
        self.g = graph_create(cas_log_capacity if cas_log else 0)
        self.cas_log_enabled = bool(cas_log)

    def __dealloc__(self):
        if self.g != NULL:
            graph_destroy(self.g)

    # -- operations ---------------------------------------------------------

    def add_vertex(self, key, budget=None):
        cdef int64_t k = key
        cdef int64_t b = -1 if budget is None else budget
        cdef int r
        with nogil:
            r = add_vertex(self.g, k, b)
        return _bool_result(r)

    def remove_vertex(self, key, budget=None):
        cdef int64_t k = key
        cdef int64_t b = -1 if budget is None else budget
        cdef int r
        with nogil:
            r = remove_vertex(self.g, k, b)
        return _bool_result(r)

    def contains_vertex(self, key):
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = contains_vertex(self.g, k)
        return bool(r)

    def add_edge(self, key1, key2, budget=None):
        cdef int64_t a = key1, b2 = key2
        cdef int64_t b = -1 if budget is None else budget
        cdef int r
        with nogil:
            r = add_edge(self.g, a, b2, b)
        return _edge_result(r)

    def remove_edge(self, key1, key2, budget=None):
        cdef int64_t a = key1, b2 = key2
        cdef int64_t b = -1 if budget is None else budget
        cdef int r
        with nogil:
            r = remove_edge(self.g, a, b2, b)
        return _edge_result(r)

    def contains_edge(self, key1, key2):
        cdef int64_t a = key1, b2 = key2
        cdef int r
        with nogil:
            r = contains_edge(self.g, a, b2)
        return EdgeOp(r)

    # -- hooks and introspection ---------------------------------------------

    def inject_cas_failures(self, n):
        g_inject(self.g, n)

    def _force_mark_vertex(self, key):
        return bool(dbg_mark_vertex(self.g, key))

    def _force_mark_edge(self, key1, key2):
        return bool(dbg_mark_edge(self.g, key1, key2))

    def snapshot(self):
        """Logical (vertices, edges) sets: unmarked LIVE nodes only."""
        verts = set()
        edges = set()
        cdef VNode* v = v_next(g_head(self.g))
        cdef ENode* e
        cdef VNode* dest
        while v_key(v) < KEY_MAX:
            if not v_marked(v) and v_settled(v) == 1:
                verts.add(v_key(v))
                e = e_next(v_ehead(v))
                while e_key(e) < KEY_MAX:
                    dest = e_dest(e)
                    if (
                        not e_marked(e)
                        and e_settled(e) == 1
                        and dest != NULL
                        and not v_marked(dest)
                        and v_settled(dest) == 1
                    ):
                        edges.add((v_key(v), e_key(e)))
                    e = e_next(e)
            v = v_next(v)
        return verts, edges

    def _vertex_chain(self):
        """Physical vertex chain as (key, marked, settled) including sentinels."""
        out = []
        cdef VNode* v = g_head(self.g)
        while True:
            out.append((v_key(v), bool(v_marked(v)), v_settled(v)))
            if v_key(v) == KEY_MAX:
                break
            v = v_next(v)
        return out

    def _edge_chain(self, key):
        """Physical edge chain of the first vertex at key, or None."""
        cdef VNode* v = v_next(g_head(self.g))
        while v_key(v) < key:
            v = v_next(v)
        if v_key(v) != key or v_ehead(v) == NULL:
            return None
        out = []
        cdef ENode* e = v_ehead(v)
        cdef VNode* dest
        while True:
            dest = e_dest(e)
            dk = None if dest == NULL else v_key(dest)
            dead_dest = dest != NULL and (v_marked(dest) or v_settled(dest) != 1)
            out.append((e_key(e), bool(e_marked(e)), e_settled(e), dk, dead_dest))
            if e_key(e) == KEY_MAX:
                break
            e = e_next(e)
        return out

    def check_invariants(self, purge_first=True):
        """Full physical walk; returns a list of violation strings (empty = ok)."""
        problems = []
        if purge_first:
            with nogil:
                purge(self.g)
        cdef VNode* v = g_head(self.g)
        cdef ENode* e
        cdef VNode* dest
        seen = set()
        prev = None
        eprev = None
        while True:
            k = v_key(v)
            if prev is not None and k <= prev:
                problems.append(f"vertex chain not sorted at {k}")
                break
            prev = k
            vlive = not v_marked(v) and v_settled(v) == 1
            if vlive and KEY_MIN < k < KEY_MAX:
                if k in seen:
                    problems.append(f"duplicate live vertex {k}")
                seen.add(k)
            if v_ehead(v) != NULL:
                e = v_ehead(v)
                eprev = None
                eseen = set()
                while True:
                    ek = e_key(e)
                    if eprev is not None and ek <= eprev:
                        problems.append(f"edge chain not sorted at {k}->{ek}")
                        break
                    eprev = ek
                    elive = not e_marked(e) and e_settled(e) == 1
                    if elive and KEY_MIN < ek < KEY_MAX:
                        if ek in eseen:
                            problems.append(f"duplicate live edge {k}->{ek}")
                        eseen.add(ek)
                        dest = e_dest(e)
                        if dest == NULL:
                            problems.append(f"live edge {k}->{ek} without destination")
                        elif vlive and purge_first and (v_marked(dest) or v_settled(dest) != 1):
                            problems.append(f"live edge {k}->{ek} to dead vertex after purge")
                    if ek == KEY_MAX:
                        break
                    e = e_next(e)
            if k == KEY_MAX:
                break
            v = v_next(v)
        return problems

    def stats(self):
        return {
            "retired_vertices": g_retired_v(self.g),
            "retired_edges": g_retired_e(self.g),
        }

    def cas_log_entries(self):
        """Normalized (cell_id, old_target, old_mark, new_target, new_mark) tuples."""
        cdef size_t n = log_count(self.g)
        cdef size_t i
        cdef uintptr_t cell, o, w
        out = []
        for i in range(n):
            log_entry(self.g, i, &cell, &o, &w)
            out.append(
                (cell, o & ~<uintptr_t>1, bool(o & 1), w & ~<uintptr_t>1, bool(w & 1))
            )
        return out

    def cas_log_overflowed(self):
        return bool(log_overflow(self.g))

    def bench_loop(self, int tid, BenchControl ctl, seed, cdf, key_max):
        cdef uint64_t[6] c
        for i in range(6):
            c[i] = cdf[i]
        cdef uint64_t s = seed
        cdef int64_t km = key_max
        cdef uint64_t count
        with nogil:
            count = bench_worker(IMPL_LOCKFREE, self.g, NULL, NULL, NULL, tid, ctl.ctl, s, c, km)
        return count


cdef class WaitFreeEngine:
    """Compiled wait-free slow path over a LockFreeGraph structure."""

    cdef Engine* e
    cdef readonly LockFreeGraph graph
    cdef readonly int capacity
    cdef readonly object helped_lookups
    cdef object _tls

    def __cinit__(
        self,
        int capacity,
        graph=None,
        helped_lookups=True,
        cas_log=False,
        track_steps=False,
        log_completions=False,  # accepted for API parity; counters only here
    ):
        self.graph = graph if graph is not None else LockFreeGraph(cas_log=cas_log)
        self.capacity = capacity
        self.helped_lookups = bool(helped_lookups)
        self.e = engine_create(self.graph.g, capacity, bool(helped_lookups), bool(track_steps))
        self._tls = threading.local()

    def __dealloc__(self):
        if self.e != NULL:
            engine_destroy(self.e)

    # -- registry / phases ----------------------------------------------------

    def register_thread(self):
        tid = eng_register(self.e)
        if tid < 0:
            raise CapacityExceeded(f"capacity {self.capacity} exceeded")
        self._tls.slot = tid
        return tid

    def _my_slot(self):
        tid = getattr(self._tls, "slot", None)
        if tid is None:
            tid = self.register_thread()
        return tid

    def next_phase(self):
        return next_phase(self.e)

    def current_phase(self):
        return eng_phase(self.e)

    def help_graph_ds(self, phase):
        cdef uint64_t p = phase
        with nogil:
            help_all(self.e, p)

    def slot_info(self, tid):
        k = OpKind(slot_kind(self.e, tid))
        return k, slot_phase(self.e, tid), slot_result(self.e, tid)

    # -- wait-free operations ---------------------------------------------------

    def wf_add_vertex(self, key, tid=None):
        cdef int t = self._my_slot() if tid is None else tid
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = wf_add_vertex(self.e, t, k)
        if r == RES_BAD_PUBLISH:
            raise PendingOperation(f"slot {t} already pending")
        return bool(r)

    def wf_remove_vertex(self, key, tid=None):
        cdef int t = self._my_slot() if tid is None else tid
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = wf_remove_vertex(self.e, t, k)
        if r == RES_BAD_PUBLISH:
            raise PendingOperation(f"slot {t} already pending")
        return bool(r)

    def wf_contains_vertex(self, key, tid=None):
        cdef int t = self._my_slot() if tid is None else tid
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = wf_contains_vertex(self.e, t, k)
        if r == RES_BAD_PUBLISH:
            raise PendingOperation(f"slot {t} already pending")
        return bool(r)

    def wf_add_edge(self, key1, key2, tid=None):
        cdef int t = self._my_slot() if tid is None else tid
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = wf_add_edge(self.e, t, a, b)
        if r == RES_BAD_PUBLISH:
            raise PendingOperation(f"slot {t} already pending")
        return EdgeOp(r)

    def wf_remove_edge(self, key1, key2, tid=None):
        cdef int t = self._my_slot() if tid is None else tid
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = wf_remove_edge(self.e, t, a, b)
        if r == RES_BAD_PUBLISH:
            raise PendingOperation(f"slot {t} already pending")
        return EdgeOp(r)

    def wf_contains_edge(self, key1, key2, tid=None):
        cdef int t = self._my_slot() if tid is None else tid
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = wf_contains_edge(self.e, t, a, b)
        if r == RES_BAD_PUBLISH:
            raise PendingOperation(f"slot {t} already pending")
        return EdgeOp(r)

    # -- stall-test hooks ---------------------------------------------------------

    def publish_pending(self, tid, kind, key1, key2=None):
        kind = OpKind(kind)
        if OpKind(slot_kind(self.e, tid)) in _PENDING_KINDS:
            raise PendingOperation(f"slot {tid} already pending")
        cdef uint64_t ph
        if kind in (OpKind.ADD_VERTEX, OpKind.REMOVE_VERTEX, OpKind.FIND_VERTEX):
            ph = publish_vertex_op(self.e, tid, int(kind), key1)
            return ph, None
        ph = publish_edge_op(self.e, tid, int(kind), key1, key2)
        if ph == 0:
            return None, EdgeOp.VERTEX_NOT_PRESENT
        return ph, None

    # -- debug counters ---------------------------------------------------------

    @property
    def max_help_rounds(self):
        return eng_max_rounds(self.e)

    def completion_stats(self):
        return {
            "won": eng_completions_won(self.e),
            "lost": eng_completions_lost(self.e),
        }

    def bench_loop(self, int tid, BenchControl ctl, seed, cdf, key_max):
        cdef uint64_t[6] c
        for i in range(6):
            c[i] = cdf[i]
        cdef uint64_t s = seed
        cdef int64_t km = key_max
        cdef uint64_t count
        with nogil:
            count = bench_worker(IMPL_WF, NULL, self.e, NULL, NULL, tid, ctl.ctl, s, c, km)
        return count


cdef class FpspGraph:
    """Compiled fast-path/slow-path facade."""

    cdef Fpsp* f
    cdef readonly WaitFreeEngine engine
    cdef readonly LockFreeGraph graph
    cdef readonly object max_fail
    cdef readonly object help_before_fast

    def __cinit__(
        self,
        int capacity,
        max_fail=20,
        help_before_fast=True,
        helped_lookups=False,
        cas_log=False,
    ):
        if max_fail < 1:
            raise ValueError("max_fail must be >= 1")
        self.engine = WaitFreeEngine(capacity, helped_lookups=helped_lookups, cas_log=cas_log)
        self.graph = self.engine.graph
        self.max_fail = max_fail
        self.help_before_fast = bool(help_before_fast)
        self.f = fpsp_create(self.engine.e, max_fail, bool(help_before_fast))

    def __dealloc__(self):
        if self.f != NULL:
            fpsp_destroy(self.f)

    def register_thread(self):
        return self.engine.register_thread()

    def _tid(self):
        return self.engine._my_slot()

    def add_vertex(self, key):
        cdef int t = self._tid()
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = fpsp_add_vertex(self.f, t, k)
        return bool(r)

    def remove_vertex(self, key):
        cdef int t = self._tid()
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = fpsp_remove_vertex(self.f, t, k)
        return bool(r)

    def contains_vertex(self, key):
        cdef int t = self._tid()
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = fpsp_contains_vertex(self.f, t, k)
        return bool(r)

    def add_edge(self, key1, key2):
        cdef int t = self._tid()
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = fpsp_add_edge(self.f, t, a, b)
        return EdgeOp(r)

    def remove_edge(self, key1, key2):
        cdef int t = self._tid()
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = fpsp_remove_edge(self.f, t, a, b)
        return EdgeOp(r)

    def contains_edge(self, key1, key2):
        cdef int t = self._tid()
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = fpsp_contains_edge(self.f, t, a, b)
        return EdgeOp(r)

    def stats(self):
        out = {}
        for kind in (
            OpKind.ADD_VERTEX,
            OpKind.REMOVE_VERTEX,
            OpKind.FIND_VERTEX,
            OpKind.ADD_EDGE,
            OpKind.REMOVE_EDGE,
            OpKind.FIND_EDGE,
        ):
            out[kind.name] = fpsp_slow_for(self.f, int(kind))
        out["total"] = fpsp_slow_total(self.f)
        return out

    def slowpath_entries(self):
        return fpsp_slow_total(self.f)

    def bench_loop(self, int tid, BenchControl ctl, seed, cdf, key_max):
        cdef uint64_t[6] c
        for i in range(6):
            c[i] = cdf[i]
        cdef uint64_t s = seed
        cdef int64_t km = key_max
        cdef uint64_t count
        with nogil:
            count = bench_worker(IMPL_FPSP, NULL, NULL, self.f, NULL, tid, ctl.ctl, s, c, km)
        return count


cdef class CoarseGraph:
    """The compiled structure behind one global mutex (bench comparison)."""

    cdef Coarse* c

    def __cinit__(self):
        self.c = coarse_create()

    def __dealloc__(self):
        if self.c != NULL:
            coarse_destroy(self.c)

    def add_vertex(self, key):
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = coarse_add_vertex(self.c, k)
        return bool(r)

    def remove_vertex(self, key):
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = coarse_remove_vertex(self.c, k)
        return bool(r)

    def contains_vertex(self, key):
        cdef int64_t k = key
        cdef int r
        with nogil:
            r = coarse_contains_vertex(self.c, k)
        return bool(r)

    def add_edge(self, key1, key2):
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = coarse_add_edge(self.c, a, b)
        return EdgeOp(r)

    def remove_edge(self, key1, key2):
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = coarse_remove_edge(self.c, a, b)
        return EdgeOp(r)

    def contains_edge(self, key1, key2):
        cdef int64_t a = key1, b = key2
        cdef int r
        with nogil:
            r = coarse_contains_edge(self.c, a, b)
        return EdgeOp(r)

    def bench_loop(self, int tid, BenchControl ctl, seed, cdf, key_max):
        cdef uint64_t[6] c
        for i in range(6):
            c[i] = cdf[i]
        cdef uint64_t s = seed
        cdef int64_t km = key_max
        cdef uint64_t count
        with nogil:
            count = bench_worker(IMPL_COARSE, NULL, NULL, NULL, self.c, tid, ctl.ctl, s, c, km)
        return count
