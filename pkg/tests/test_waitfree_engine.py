"""Wait-free slow path: phases, publication, helping, stalled-operation completion."""

import threading

import pytest

from wfgraph.codes import CapacityExceeded, EdgeOp, OpKind, PendingOperation

from helpers import EngineView, check_linearizable, differential, random_trace, stress_record
from wfgraph.lincheck import Verdict

DONE = (OpKind.DONE_OK, OpKind.DONE_FAIL)


# -- registry and phases --------------------------------------------------------


def test_register_thread_ids(backend):
    e = backend.WaitFreeEngine(4)
    assert e.register_thread() == 0

    ids = []

    def reg():
        ids.append(e.register_thread())

    ts = [threading.Thread(target=reg) for _ in range(3)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert sorted(ids) == [1, 2, 3]
    with pytest.raises(CapacityExceeded):
        e.register_thread()


def test_next_phase_dense_from_one(backend):
    e = backend.WaitFreeEngine(2)
    assert [e.next_phase() for _ in range(3)] == [1, 2, 3]
    assert e.current_phase() == 3


def test_next_phase_unique_across_threads(backend):
    e = backend.WaitFreeEngine(8)
    results = [[] for _ in range(8)]

    def worker(tid):
        for _ in range(2000):
            results[tid].append(e.next_phase())

    ts = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    flat = [p for r in results for p in r]
    assert len(set(flat)) == len(flat)
    for r in results:
        assert r == sorted(r)  # strictly increasing per thread


# -- publication ------------------------------------------------------------------


def test_publish_then_slot_holds_descriptor(backend):
    e = backend.WaitFreeEngine(2)
    phase, early = e.publish_pending(0, OpKind.ADD_VERTEX, 5)
    assert early is None
    kind, ph, _ = e.slot_info(0)
    assert kind == OpKind.ADD_VERTEX and ph == phase


def test_publish_over_pending_is_an_error(backend):
    e = backend.WaitFreeEngine(2)
    e.publish_pending(0, OpKind.ADD_VERTEX, 5)
    with pytest.raises(PendingOperation):
        e.publish_pending(0, OpKind.ADD_VERTEX, 6)


def test_edge_publish_validates_endpoints_first(backend):
    e = backend.WaitFreeEngine(2)
    phase, early = e.publish_pending(0, OpKind.ADD_EDGE, 1, 2)
    assert phase is None and early == EdgeOp.VERTEX_NOT_PRESENT
    kind, _, _ = e.slot_info(0)
    assert kind in DONE  # nothing was published


# -- the dispatcher ----------------------------------------------------------------


def test_help_is_noop_when_all_slots_done(backend):
    e = backend.WaitFreeEngine(4)
    e.help_graph_ds(e.current_phase())
    for tid in range(4):
        kind, _, _ = e.slot_info(tid)
        assert kind in DONE


def test_phase_filter_leaves_later_ops_untouched(backend):
    e = backend.WaitFreeEngine(2)
    phase, _ = e.publish_pending(0, OpKind.ADD_VERTEX, 5)
    e.help_graph_ds(phase - 1)
    kind, _, _ = e.slot_info(0)
    assert kind == OpKind.ADD_VERTEX  # untouched
    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_OK and res == 1
    assert e.graph.contains_vertex(5)


def _helped(backend, setup, kind, k1, k2=None):
    """Publish without helping, then complete from a second thread."""
    e = backend.WaitFreeEngine(2)
    setup(e.graph)
    phase, early = e.publish_pending(0, kind, k1, k2)
    assert early is None

    def helper():
        e.help_graph_ds(phase)

    t = threading.Thread(target=helper)
    t.start()
    t.join()
    got_kind, got_phase, res = e.slot_info(0)
    assert got_kind in DONE and got_phase == phase
    return e, got_kind, res


def test_stalled_add_vertex_completed_by_helper(backend):
    e, kind, res = _helped(backend, lambda g: None, OpKind.ADD_VERTEX, 5)
    assert kind == OpKind.DONE_OK and res == 1
    assert e.graph.contains_vertex(5)


def test_stalled_add_vertex_duplicate_fails(backend):
    e, kind, res = _helped(backend, lambda g: g.add_vertex(5), OpKind.ADD_VERTEX, 5)
    assert kind == OpKind.DONE_FAIL and res == 0
    verts, _ = e.graph.snapshot()
    assert verts == {5}


def test_stalled_remove_vertex_completed_by_helper(backend):
    e, kind, res = _helped(backend, lambda g: g.add_vertex(5), OpKind.REMOVE_VERTEX, 5)
    assert kind == OpKind.DONE_OK and res == 1
    assert not e.graph.contains_vertex(5)


def test_stalled_remove_vertex_absent_fails(backend):
    e, kind, res = _helped(backend, lambda g: None, OpKind.REMOVE_VERTEX, 5)
    assert kind == OpKind.DONE_FAIL and res == 0


def test_stalled_find_vertex_both_ways(backend):
    e, kind, res = _helped(backend, lambda g: g.add_vertex(5), OpKind.FIND_VERTEX, 5)
    assert kind == OpKind.DONE_OK and res == 1
    e, kind, res = _helped(backend, lambda g: None, OpKind.FIND_VERTEX, 5)
    assert kind == OpKind.DONE_FAIL and res == 0


def _two_vertices(g):
    g.add_vertex(1)
    g.add_vertex(2)


def test_stalled_add_edge_completed_by_helper(backend):
    e, kind, res = _helped(backend, _two_vertices, OpKind.ADD_EDGE, 1, 2)
    assert kind == OpKind.DONE_OK and res == EdgeOp.EDGE_ADDED
    assert e.graph.contains_edge(1, 2) == EdgeOp.EDGE_PRESENT


def test_stalled_remove_edge_completed_by_helper(backend):
    def setup(g):
        _two_vertices(g)
        g.add_edge(1, 2)

    e, kind, res = _helped(backend, setup, OpKind.REMOVE_EDGE, 1, 2)
    assert kind == OpKind.DONE_OK and res == EdgeOp.EDGE_REMOVED
    assert e.graph.contains_edge(1, 2) == EdgeOp.VERTEX_OR_EDGE_NOT_PRESENT


def test_stalled_remove_edge_absent_edge(backend):
    e, kind, res = _helped(backend, _two_vertices, OpKind.REMOVE_EDGE, 1, 2)
    assert kind == OpKind.DONE_FAIL and res == EdgeOp.EDGE_NOT_PRESENT


def test_stalled_find_edge_both_ways(backend):
    def setup(g):
        _two_vertices(g)
        g.add_edge(1, 2)

    e, kind, res = _helped(backend, setup, OpKind.FIND_EDGE, 1, 2)
    assert kind == OpKind.DONE_OK and res == EdgeOp.EDGE_PRESENT
    e, kind, res = _helped(backend, _two_vertices, OpKind.FIND_EDGE, 1, 2)
    assert kind == OpKind.DONE_FAIL and res == EdgeOp.VERTEX_OR_EDGE_NOT_PRESENT


def test_helping_completeness_after_dispatch(backend):
    e = backend.WaitFreeEngine(3)
    p1, _ = e.publish_pending(0, OpKind.ADD_VERTEX, 5)
    p2, _ = e.publish_pending(1, OpKind.ADD_VERTEX, 6)
    e.help_graph_ds(max(p1, p2))
    for tid in (0, 1):
        kind, _, _ = e.slot_info(tid)
        assert kind in DONE


def test_two_helpers_race_single_completion(backend, fast_thread_switching):
    for _ in range(50):
        e = backend.WaitFreeEngine(2)
        phase, _ = e.publish_pending(0, OpKind.ADD_VERTEX, 5)
        barrier = threading.Barrier(2)

        def helper():
            barrier.wait()
            e.help_graph_ds(phase)

        ts = [threading.Thread(target=helper) for _ in range(2)]
        for t in ts:
            t.start()
        for t in ts:
            t.join()
        kind, _, res = e.slot_info(0)
        assert kind == OpKind.DONE_OK and res == 1
        verts, _ = e.graph.snapshot()
        assert verts == {5}
        assert e.completion_stats()["won"] == 1
        assert e.graph.check_invariants() == []


# -- public wait-free operations ------------------------------------------------------


def test_wf_sequential_contract(backend):
    e = backend.WaitFreeEngine(2)
    assert e.wf_add_vertex(5) is True
    assert e.wf_add_vertex(5) is False
    assert e.wf_contains_vertex(5) is True
    assert e.wf_add_vertex(1) and e.wf_add_vertex(2)
    assert e.wf_add_edge(1, 2) == EdgeOp.EDGE_ADDED
    assert e.wf_add_edge(1, 2) == EdgeOp.EDGE_ALREADY_PRESENT
    assert e.wf_contains_edge(1, 2) == EdgeOp.EDGE_PRESENT
    assert e.wf_remove_edge(1, 2) == EdgeOp.EDGE_REMOVED
    assert e.wf_remove_edge(1, 2) == EdgeOp.EDGE_NOT_PRESENT
    assert e.wf_add_edge(1, 9) == EdgeOp.VERTEX_NOT_PRESENT
    assert e.wf_remove_vertex(5) is True
    assert e.wf_remove_vertex(5) is False
    assert e.wf_contains_vertex(5) is False


@pytest.mark.parametrize("helped", [True, False])
def test_wf_differential_both_lookup_modes(backend, helped):
    e = backend.WaitFreeEngine(1, helped_lookups=helped)
    trace = random_trace(21, 8000, 32)
    assert differential(EngineView(e), trace) == []
    assert e.graph.check_invariants() == []


def test_nohelp_lookups_bypass_state_array(backend):
    e = backend.WaitFreeEngine(2, helped_lookups=False)
    e.wf_add_vertex(5)
    before = e.current_phase()
    assert e.wf_contains_vertex(5) is True
    assert e.wf_contains_edge(5, 6) == EdgeOp.VERTEX_NOT_PRESENT
    assert e.current_phase() == before  # no phase taken, nothing published


def test_incident_edges_gone_after_wf_remove_vertex(backend):
    e = backend.WaitFreeEngine(2)
    for k in (1, 2, 3):
        e.wf_add_vertex(k)
    e.wf_add_edge(1, 2)
    e.wf_add_edge(2, 3)
    e.wf_add_edge(3, 1)
    assert e.wf_remove_vertex(1) is True
    assert e.wf_contains_edge(1, 2) == EdgeOp.VERTEX_NOT_PRESENT
    assert e.wf_contains_edge(3, 1) == EdgeOp.VERTEX_NOT_PRESENT
    verts, edges = e.graph.snapshot()
    assert verts == {2, 3} and edges == {(2, 3)}


@pytest.mark.parametrize("helped", [True, False])
def test_wf_stress_linearizable(backend, helped, fast_thread_switching):
    n_threads = 4
    for seed in range(10):
        e = backend.WaitFreeEngine(n_threads, helped_lookups=helped, track_steps=True)
        hist = stress_record(
            EngineView(e), n_threads, 12, 6, seed, register=e.register_thread
        )
        res = check_linearizable(hist)
        assert res.verdict == Verdict.LINEARIZABLE, f"seed {seed}"
        assert e.graph.check_invariants() == []


def test_completion_log_uniqueness_and_agreement(fast_thread_switching):
    # pure backend keeps a full completion-attempt log; every descriptor gets
    # exactly one winning completion, and update-op attempts all agree
    from wfgraph import pure
    from helpers import random_trace, replay

    e = pure.WaitFreeEngine(4, log_completions=True)
    barrier = threading.Barrier(4)

    def worker(tid):
        e.register_thread()
        view = EngineView(e)
        barrier.wait()
        replay(view, random_trace(50 + tid, 150, 5))

    ts = [threading.Thread(target=worker, args=(i,)) for i in range(4)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    by_desc = {}
    for tid, phase, kind, ok, result, won in e.completion_log:
        by_desc.setdefault((tid, phase), []).append((kind, ok, result, won))
    update_kinds = {OpKind.ADD_VERTEX, OpKind.REMOVE_VERTEX, OpKind.ADD_EDGE, OpKind.REMOVE_EDGE}
    for key, attempts in by_desc.items():
        assert sum(1 for a in attempts if a[3]) == 1, f"{key}: multiple winners"
        if attempts[0][0] in update_kinds:
            assert len({(ok, res) for _, ok, res, _ in attempts}) == 1, (
                f"{key}: helpers disagreed on an update outcome: {attempts}"
            )


def test_help_rounds_bounded_under_stress(backend, fast_thread_switching):
    n_threads = 4
    e = backend.WaitFreeEngine(n_threads, track_steps=True)
    barrier = threading.Barrier(n_threads)

    def worker(tid):
        e.register_thread()
        view = EngineView(e)
        barrier.wait()
        trace = random_trace(tid, 400, 4)
        for op, k1, k2 in trace:
            from helpers import apply_op

            apply_op(view, op, k1, k2)

    ts = [threading.Thread(target=worker, args=(i,)) for i in range(n_threads)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    # every helper loop settles within a small number of rounds per descriptor
    assert e.max_help_rounds <= 3 * n_threads + 10
