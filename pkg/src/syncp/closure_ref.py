"""Explicit-set closures and the per-pair / per-thread race checks.

Everything here works on Python sets of event indexes.  It is deliberately
simple (worklist saturation) because it serves as ground truth for the
streaming engine.
"""

from __future__ import annotations

from typing import Iterable

from .trace_model import Kind, Trace, conflicting


def tl_closure(trace: Trace, events: Iterable[int]) -> frozenset[int]:
    """Smallest superset closed under thread-order predecessors and last-write."""
    parents, lw = trace.to_parents, trace.lw
    out: set[int] = set()
    stack = list(events)
    while stack:
        e = stack.pop()
        if e in out:
            continue
        out.add(e)
        stack.extend(parents[e])
        if lw[e]:
            stack.append(lw[e])
    return frozenset(out)


def sp_closure(trace: Trace, events: Iterable[int]) -> frozenset[int]:
    """TL closure plus: two same-lock acquires inside ⇒ the earlier one's release inside."""
    cur = set(tl_closure(trace, events))
    kd, tg, match = trace.kind_of, trace.target_of, trace.match
    while True:
        by_lock: dict[int, list[int]] = {}
        for e in cur:
            if kd[e] == Kind.ACQUIRE:
                by_lock.setdefault(tg[e], []).append(e)
        extra = []
        for acqs in by_lock.values():
            if len(acqs) < 2:
                continue
            acqs.sort()
            for a in acqs[:-1]:
                rel = match[a]
                # an earlier acquire always has its release in a well-formed trace
                assert rel, f"open critical section at e{a} precedes a later acquire"
                if rel not in cur:
                    extra.append(rel)
        if not extra:
            return frozenset(cur)
        cur |= tl_closure(trace, extra)


def sp_ideal(trace: Trace, e1: int, e2: int) -> frozenset[int]:
    """SP closure of the thread-order parents of both events."""
    return sp_closure(trace, trace.to_parents[e1] + trace.to_parents[e2])


def is_syncp_race_pair(trace: Trace, e1: int, e2: int) -> bool:
    if not conflicting(trace, e1, e2):
        raise ValueError(f"(e{e1}, e{e2}) is not a conflicting pair")
    if e1 > e2:
        e1, e2 = e2, e1
    ideal = sp_ideal(trace, e1, e2)
    assert e2 not in ideal
    return e1 not in ideal


def _conflicting_in_thread(trace: Trace, e: int, t: int) -> list[int]:
    x = trace.target_of[e]
    th = trace.thread_of
    return [f for f in trace.accesses_of_var[x] if f < e and th[f] == t and conflicting(trace, f, e)]


def syncp_races_with_thread(trace: Trace, e: int, t: int) -> int | None:
    """Earliest event of thread ``t`` forming a sync-preserving race with ``e``.

    The ideal only grows along the scan, so it is carried from one candidate
    to the next instead of being recomputed from scratch.
    """
    if t == trace.thread_of[e]:
        raise ValueError("candidate thread must differ from the event's thread")
    if trace.kind_of[e] > Kind.WRITE:
        return None
    ideal: frozenset[int] = frozenset()
    base = trace.to_parents[e]
    for f in _conflicting_in_thread(trace, e, t):
        ideal = sp_closure(trace, ideal | set(base) | set(trace.to_parents[f]))
        if f not in ideal:
            return f
    return None


def racy_partners(trace: Trace) -> dict[int, int]:
    """Map each racy later event to its earliest sync-preserving partner."""
    out: dict[int, int] = {}
    for e in range(1, len(trace) + 1):
        if trace.kind_of[e] > Kind.WRITE:
            continue
        best = None
        for t in range(trace.T):
            if t == trace.thread_of[e]:
                continue
            f = syncp_races_with_thread(trace, e, t)
            if f is not None and (best is None or f < best):
                best = f
        if best is not None:
            out[e] = best
    return out


def race_pairs(trace: Trace) -> set[tuple[int, int]]:
    """Every sync-preserving race pair (e1 < e2), by direct per-pair checks."""
    out = set()
    for xs in trace.accesses_of_var:
        for j, e2 in enumerate(xs):
            for e1 in xs[:j]:
                if conflicting(trace, e1, e2) and is_syncp_race_pair(trace, e1, e2):
                    out.add((e1, e2))
    return out
