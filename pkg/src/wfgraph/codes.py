"""Shared result vocabulary, operation tags and key-domain constants."""

from __future__ import annotations

import enum

# Key domain: 64-bit signed; the extreme values are reserved for the list
# sentinels, user keys lie strictly between them.
KEY_MIN = -(2**63)
KEY_MAX = 2**63 - 1


class EdgeOp(enum.IntEnum):
    """Result vocabulary of the edge operations (and vertex-absence cases)."""

    EDGE_ADDED = 1
    EDGE_ALREADY_PRESENT = 2
    EDGE_REMOVED = 3
    EDGE_NOT_PRESENT = 4
    EDGE_PRESENT = 5
    VERTEX_NOT_PRESENT = 6
    VERTEX_OR_EDGE_NOT_PRESENT = 7


class OpKind(enum.IntEnum):
    """Operation tags used by descriptors, traces and the bench workload."""

    ADD_VERTEX = 1
    REMOVE_VERTEX = 2
    FIND_VERTEX = 3
    ADD_EDGE = 4
    REMOVE_EDGE = 5
    FIND_EDGE = 6
    DONE_OK = 7
    DONE_FAIL = 8


#: Short trace names, in the bench weight order (addV, remV, conV, addE, remE, conE).
OP_NAMES = {
    OpKind.ADD_VERTEX: "addV",
    OpKind.REMOVE_VERTEX: "remV",
    OpKind.FIND_VERTEX: "conV",
    OpKind.ADD_EDGE: "addE",
    OpKind.REMOVE_EDGE: "remE",
    OpKind.FIND_EDGE: "conE",
}
OP_BY_NAME = {v: k for k, v in OP_NAMES.items()}


class _Exhausted:
    """Singleton returned by budgeted operations whose decisive CAS kept failing."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EXHAUSTED"

    def __bool__(self):
        raise TypeError("EXHAUSTED has no truth value; check identity first")


EXHAUSTED = _Exhausted()


class CapacityExceeded(RuntimeError):
    """More threads registered than the engine was constructed for."""


class PendingOperation(RuntimeError):
    """A slot was published while its previous operation was still pending."""


def check_user_key(key: int) -> bool:
    """True iff key is a valid user key (sentinel keys excluded)."""
    return KEY_MIN < key < KEY_MAX
