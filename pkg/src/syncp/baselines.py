"""Happens-before and schedulable-happens-before race detectors.

Both use full vector clocks (no epochs).  Every event bumps its own thread's
component, so the own component of an access is its position in the thread
and e1 is ordered before e2 exactly when that position is at most e2's view
of e1's thread.  Accesses are kept per (thread, kind, variable) in trace
order, which makes the earliest unordered partner a binary search away.

HB orders thread order plus release -> later acquire of the same lock.  SHB
adds last-write -> read, and checks e1 against the thread-order
predecessors of e2 rather than e2 itself.
"""

from __future__ import annotations

from bisect import bisect_right

from .syncp_engine import CONFLICTS, R, W, RaceReport
from .trace_model import Kind, Trace, check_valid


def _detect(trace: Trace, shb: bool, all_pairs: bool = False):
    T, V, L = trace.T, trace.V, trace.L
    clock = [[0] * T for _ in range(T)]
    rel = [[0] * T for _ in range(L)]
    lw = [[0] * T for _ in range(V)]
    # (thread, kind, var) -> positions in the thread, event idx, locs
    pos: dict = {}
    idxs: dict = {}
    th, kd, tg = trace.thread_of, trace.kind_of, trace.target_of
    lc = trace._cols[3]
    reports: list[RaceReport] = []
    pairs: list[tuple[int, int]] = []
    for e in range(1, len(trace) + 1):
        t, k, x = th[e], kd[e], tg[e]
        c = clock[t]
        view = c  # what e2 knows before its own step (fork edges already joined in)
        if k <= Kind.WRITE:
            best = None
            for u in range(T):
                if u == t:
                    continue
                for a1 in CONFLICTS[k]:
                    key = (u, a1, x)
                    ps = pos.get(key)
                    if not ps:
                        continue
                    j = bisect_right(ps, view[u])
                    if j == len(ps):
                        continue
                    cand = idxs[key][j]
                    if all_pairs:
                        pairs.extend((e1, e) for e1 in idxs[key][j:])
                    if best is None or cand < best[0]:
                        best = (cand, u, a1)
            c[t] += 1
            if k == R and shb:
                lwx = lw[x]
                for i in range(T):
                    if lwx[i] > c[i]:
                        c[i] = lwx[i]
            if k == W and shb:
                lw[x] = list(c)
            key = (t, k, x)
            pos.setdefault(key, []).append(c[t])
            idxs.setdefault(key, []).append(e)
            if best is not None:
                e1 = best[0]
                l1, l2 = lc[e1], lc[e]
                reports.append(RaceReport(e1, e, x, (best[1], t), (best[2], k),
                                          (None if l1 < 0 else l1, None if l2 < 0 else l2)))
            continue
        c[t] += 1
        if k == Kind.ACQUIRE:
            r = rel[x]
            for i in range(T):
                if r[i] > c[i]:
                    c[i] = r[i]
        elif k == Kind.RELEASE:
            rel[x] = list(c)
        elif k == Kind.FORK:
            child = clock[x]
            for i in range(T):
                if c[i] > child[i]:
                    child[i] = c[i]
        elif k == Kind.JOIN:
            child = clock[x]
            for i in range(T):
                if child[i] > c[i]:
                    c[i] = child[i]
    return sorted(pairs) if all_pairs else reports


def hb_run(trace: Trace, validate: bool = True) -> list[RaceReport]:
    """Every e2 with an earlier conflicting e1 unordered by happens-before."""
    if validate:
        check_valid(trace)
    return _detect(trace, shb=False)


def shb_run(trace: Trace, validate: bool = True) -> list[RaceReport]:
    """Every e2 with an earlier conflicting e1 not SHB-before e2's thread predecessors."""
    if validate:
        check_valid(trace)
    return _detect(trace, shb=True)


def hb_race_pairs(trace: Trace) -> list[tuple[int, int]]:
    return _detect(trace, shb=False, all_pairs=True)


def shb_race_pairs(trace: Trace) -> list[tuple[int, int]]:
    return _detect(trace, shb=True, all_pairs=True)
