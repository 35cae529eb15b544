"""Vector timestamps as plain int tuples.

A timestamp V represents the set of events e with C_e ⊑ V; for sets closed
under thread order and last-write, V(t) is just the number of t-events in the
set.  Tuples keep the values hashable and cheap to snapshot into histories.
"""

from __future__ import annotations

from operator import le

VectorTimestamp = tuple[int, ...]


def bottom(width: int) -> VectorTimestamp:
    return (0,) * width


def _same_width(v1: VectorTimestamp, v2: VectorTimestamp) -> None:
    if len(v1) != len(v2):
        raise ValueError(f"timestamp width mismatch: {len(v1)} vs {len(v2)}")


def join(v1: VectorTimestamp, v2: VectorTimestamp) -> VectorTimestamp:
    """Pointwise max."""
    _same_width(v1, v2)
    return tuple(map(max, v1, v2))


def leq(v1: VectorTimestamp, v2: VectorTimestamp) -> bool:
    """v1 ⊑ v2, pointwise."""
    _same_width(v1, v2)
    return all(map(le, v1, v2))


def with_(v: VectorTimestamp, t: int, c: int) -> VectorTimestamp:
    if not 0 <= t < len(v):
        raise IndexError(f"thread {t} outside timestamp of width {len(v)}")
    if c < 0:
        raise ValueError("timestamp entries are nonnegative")
    return v[:t] + (c,) + v[t + 1:]


def bump(v: VectorTimestamp, t: int) -> VectorTimestamp:
    return with_(v, t, v[t] + 1)
