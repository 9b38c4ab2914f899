"""Marked references: a node reference packed with a one-bit deletion mark.

The mark rides in the same atomically-updated unit as the reference, so a
single CAS covers both. In this pure-Python backend the "packed word" is an
immutable (target, mark) pair and CAS compares the target by identity, the
way a pointer CAS compares addresses. The compiled backend packs the mark
into the low bit of the pointer word instead; both satisfy the same contract.
"""

from __future__ import annotations

import threading
from typing import Any, NamedTuple, Optional


class MarkedRef(NamedTuple):
    target: Optional[Any]
    marked: bool


def pack(target, marked: bool = False) -> MarkedRef:
    return MarkedRef(target, bool(marked))


def is_marked(ref: MarkedRef) -> bool:
    return ref.marked


def mark(ref: MarkedRef) -> MarkedRef:
    return MarkedRef(ref.target, True)


def unmark(ref: MarkedRef) -> MarkedRef:
    return MarkedRef(ref.target, False)


def _same(a: MarkedRef, b: MarkedRef) -> bool:
    return a.target is b.target and a.marked == b.marked


class CasLog:
    """Append-only record of successful CAS transitions, for invariant checks.

    Entries are (cell_id, old_ref, new_ref). list.append is atomic under the
    GIL, so no extra locking is needed on the hot path.
    """

    def __init__(self):
        self.entries: list[tuple[int, MarkedRef, MarkedRef]] = []

    def record(self, cell_id: int, old: MarkedRef, new: MarkedRef) -> None:
        self.entries.append((cell_id, old, new))

    def by_cell(self) -> dict[int, list[tuple[MarkedRef, MarkedRef]]]:
        out: dict[int, list[tuple[MarkedRef, MarkedRef]]] = {}
        for cid, old, new in self.entries:
            out.setdefault(cid, []).append((old, new))
        return out


class AtomicMarkedCell:
    """A cell holding one MarkedRef, updated only by CAS after construction.

    Plain loads are a single attribute read (atomic under the GIL); cas()
    takes the per-cell lock only long enough to compare and swap.
    """

    __slots__ = ("_ref", "_lock", "_log")

    def __init__(self, ref: MarkedRef = pack(None, False), log: CasLog | None = None):
        self._ref = ref
        self._lock = threading.Lock()
        self._log = log

    def load(self) -> MarkedRef:
        return self._ref

    def cas(self, expected: MarkedRef, new: MarkedRef) -> bool:
        with self._lock:
            cur = self._ref
            if not _same(cur, expected):
                return False
            self._ref = new
            if self._log is not None:
                self._log.record(id(self), expected, new)
        return True

    def set_mark(self) -> bool:
        """CAS the mark bit on, retrying on target changes; True if this call set it."""
        while True:
            cur = self._ref
            if cur.marked:
                return False
            if self.cas(cur, mark(cur)):
                return True
