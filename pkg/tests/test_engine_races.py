"""Deterministic drives of the helper-protocol consensus points.

These reproduce, step by step, the decision/effect races the stress suite
can only hit probabilistically: a stale failure verdict racing a concurrent
link, removal attribution between the fast path and a descriptor, and the
victim seal. Pure backend only: the steps are taken by hand on its cells.
"""

import pytest

from wfgraph import pure
from wfgraph.codes import EdgeOp, OpKind
from wfgraph.marked_ref import pack
from wfgraph.pure import FAST_CLAIM, LIVE, SEAL_ABSENT, VOID_DUP, _force_settle


def pending_desc(engine, tid):
    return engine._slots[tid].load()


def test_zombie_insert_is_never_visible():
    # a stale failure verdict (VOID) lands first; a racing helper still
    # manages the physical link; the zombie must never count as present
    e = pure.WaitFreeEngine(2)
    g = e.graph
    g.add_vertex(5)
    phase, _ = e.publish_pending(0, OpKind.ADD_VERTEX, 5)
    d = pending_desc(e, 0)
    n = d.vnode

    # failure decider: saw the duplicate, abandoned the insert
    assert _force_settle(n, VOID_DUP) == VOID_DUP

    # the duplicate disappears, then a stale linker physically links n
    assert g.remove_vertex(5) is True
    nv0 = n.next.load()
    pred, curr = g._locate_v(5)
    assert curr.key != 5
    assert n.next.cas(nv0, pack(curr, False))
    assert pred.next.cas(pack(curr, False), pack(n, False))

    # linked but VOID: readers treat it as absent, writers clean it
    assert g.contains_vertex(5) is False
    assert g.add_vertex(5) is True  # re-insert goes through after cleanup
    assert g.contains_vertex(5) is True
    assert g.check_invariants() == []

    # helpers converge on FAILURE for the abandoned descriptor
    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_FAIL and res == 0


def test_pending_insert_counts_only_after_settling():
    # a linked but not yet settled node is invisible to readers, and the
    # first presence-dependent mutator forces the verdict
    e = pure.WaitFreeEngine(2)
    g = e.graph
    phase, _ = e.publish_pending(0, OpKind.ADD_VERTEX, 5)
    n = pending_desc(e, 0).vnode

    nv0 = n.next.load()
    pred, curr = g._locate_v(5)
    assert n.next.cas(nv0, pack(curr, False))
    assert pred.next.cas(pack(curr, False), pack(n, False))

    assert g.contains_vertex(5) is False  # PENDING: not present yet
    assert g.add_vertex(5) is False       # mutator forces LIVE, sees duplicate
    assert n.settled.load() == LIVE
    assert g.contains_vertex(5) is True
    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_OK and res == 1


def test_removal_attribution_fast_path_loses_claim():
    # a descriptor claims the victim before marking; a fast-path remover
    # that marks it afterwards must report False
    e = pure.WaitFreeEngine(2)
    g = e.graph
    g.add_vertex(7)
    phase, _ = e.publish_pending(0, OpKind.REMOVE_VERTEX, 7)
    d = pending_desc(e, 0)

    _, victim = g._locate_v(7)
    assert victim.key == 7
    assert d.victim.cas(None, victim)
    assert victim.claim.cas(None, d)  # helper claimed, then stalled

    assert g.remove_vertex(7) is False  # fast path marks but cannot claim
    assert victim.next.load().marked

    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_OK and res == 1  # the descriptor owns the removal
    assert g.contains_vertex(7) is False
    assert g.check_invariants() == []


def test_removal_attribution_fast_path_wins_claim():
    # the mirror image: the fast path marks and claims first, the stalled
    # descriptor must settle on False
    e = pure.WaitFreeEngine(2)
    g = e.graph
    g.add_vertex(7)
    phase, _ = e.publish_pending(0, OpKind.REMOVE_VERTEX, 7)
    d = pending_desc(e, 0)
    _, victim = g._locate_v(7)
    assert d.victim.cas(None, victim)

    assert g.remove_vertex(7) is True  # fast path wins mark + claim
    assert victim.claim.load() is FAST_CLAIM

    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_FAIL and res == 0


def test_victim_seal_blocks_late_claims():
    e = pure.WaitFreeEngine(2)
    g = e.graph
    phase, _ = e.publish_pending(0, OpKind.REMOVE_VERTEX, 9)
    d = pending_desc(e, 0)
    e.help_graph_ds(phase)  # key absent: sealed + FAILURE
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_FAIL and res == 0
    assert d.victim.load() is SEAL_ABSENT

    # a zombie helper waking up now cannot agree on a victim any more
    g.add_vertex(9)
    _, late = g._locate_v(9)
    assert not d.victim.cas(None, late)
    assert g.contains_vertex(9) is True  # the new node is untouched


def test_edge_abandon_reason_pins_completion_value():
    # endpoint death and duplicate produce different, pinned failure codes
    e = pure.WaitFreeEngine(2)
    g = e.graph
    for k in (1, 2):
        g.add_vertex(k)
    phase, _ = e.publish_pending(0, OpKind.ADD_EDGE, 1, 2)
    d = pending_desc(e, 0)
    assert g.remove_vertex(2) is True  # endpoint dies while the op is pending
    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_FAIL and res == EdgeOp.VERTEX_NOT_PRESENT
    assert d.enode.settled.load() != LIVE


def test_pending_linked_edge_marked_by_cleanup_settles_consistently():
    # an edge is linked but not yet settled when its destination dies; the
    # cleanup walk marks the PENDING node, and helpers must still settle a
    # single consistent verdict
    e = pure.WaitFreeEngine(2)
    g = e.graph
    for k in (1, 2, 3):
        g.add_vertex(k)
    phase, _ = e.publish_pending(0, OpKind.ADD_EDGE, 1, 2)
    d = pending_desc(e, 0)
    n = d.enode

    # stalled helper: physically linked, settle still PENDING
    v1 = d.src
    nv0 = n.next.load()
    pe, ce = g._locate_e(v1, 2)
    assert n.next.cas(nv0, pack(ce, False))
    assert pe.next.cas(pack(ce, False), pack(n, False))

    assert g.remove_vertex(2) is True
    assert g.add_edge(1, 3) == EdgeOp.EDGE_ADDED  # walk past key 2 cleans it
    assert n.next.load().marked
    assert n.settled.load() == 0  # still PENDING when helpers arrive

    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    # the settled word pins the verdict: linked before the removal, so ADDED
    assert kind == OpKind.DONE_OK and res == EdgeOp.EDGE_ADDED
    assert n.settled.load() == LIVE
    assert g.contains_edge(1, 2) == EdgeOp.VERTEX_NOT_PRESENT
    assert g.check_invariants() == []


def test_stale_guard_rewrite_keeps_structure_sound():
    # a stale helper may re-stage the shared node's successor before the
    # link fires; the chain must still contain every live key
    e = pure.WaitFreeEngine(2)
    g = e.graph
    for k in (3, 9):
        g.add_vertex(k)
    phase, _ = e.publish_pending(0, OpKind.ADD_VERTEX, 5)
    n = pending_desc(e, 0).vnode

    # helper A stages successor 9's node after locating (3, 9)
    nv0 = n.next.load()
    pred, curr = g._locate_v(5)
    assert curr.key == 9
    assert n.next.cas(nv0, pack(curr, False))

    # key 7 appears; helper B re-stages to the fresher successor and links
    assert g.add_vertex(7) is True
    nv1 = n.next.load()
    pred2, curr2 = g._locate_v(5)
    assert curr2.key == 7
    assert n.next.cas(nv1, pack(curr2, False))
    assert pred2.next.cas(pack(curr2, False), pack(n, False))
    assert _force_settle(n, LIVE) == LIVE

    snapshot_verts, _ = g.snapshot()
    assert snapshot_verts == {3, 5, 7, 9}
    assert g.check_invariants() == []
    e.help_graph_ds(phase)
    kind, _, res = e.slot_info(0)
    assert kind == OpKind.DONE_OK and res == 1
