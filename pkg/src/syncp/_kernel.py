"""numba kernels: the SyncP detector over dense arrays, plus validation and filter scans.

The compiled detector follows :class:`syncp.syncp_engine.SyncPDetector`
step for step; only the storage differs.  A pre-scan sizes every history,
so each (thread, kind, variable) access queue and each (thread, lock)
critical-section queue is a fixed slice of one flat array.  All arrays are
allocated on the Python side (numpy), which keeps them visible to
tracemalloc.
"""

from __future__ import annotations

from collections.abc import Sequence

import numba as nb
import numpy as np

from .syncp_engine import RaceReport
from .trace_model import Kind, Trace

_R, _W, _ACQ, _REL, _FORK, _JOIN = (int(k) for k in Kind)

# conflict classes c of a tuple: (earlier kind, later kind)
_A1 = np.array([_W, _R, _W], dtype=np.int8)
_A2 = np.array([_R, _W, _W], dtype=np.int8)

VIOLATION_RULES = (
    "unknown event kind",
    "target or thread id out of range",
    "event of a thread after it was joined",
    "reentrant acquire",
    "acquire of a lock held by another thread",
    "release without matching acquire in thread",
    "fork of self",
    "thread forked twice",
    "fork of an already-started thread",
    "join of self",
    "thread joined twice",
)


@nb.njit(cache=True)
def _validate(th, kd, tg, T, V, L, out_idx, out_code):
    n_out = 0
    cap = out_idx.shape[0]
    holder = np.full(max(L, 1), -1, np.int64)
    started = np.zeros(max(T, 1), np.bool_)
    forked = np.zeros(max(T, 1), np.bool_)
    joined = np.zeros(max(T, 1), np.bool_)
    for i in range(th.shape[0]):
        t, k, x = th[i], kd[i], tg[i]
        c0 = -1
        c = -1
        if k < 0 or k > _JOIN:
            c0 = 0
        else:
            limit = V if k <= _W else (L if k <= _REL else T)
            if x < 0 or x >= limit or t < 0 or t >= T:
                c0 = 1
            else:
                if joined[t]:
                    c0 = 2
                started[t] = True
                if k == _ACQ:
                    if holder[x] >= 0:
                        c = 3 if holder[x] == t else 4
                    else:
                        holder[x] = t
                elif k == _REL:
                    if holder[x] != t:
                        c = 5
                    else:
                        holder[x] = -1
                elif k == _FORK:
                    if x == t:
                        c = 6
                    elif forked[x]:
                        c = 7
                    elif started[x]:
                        c = 8
                    forked[x] = True
                elif k == _JOIN:
                    if x == t:
                        c = 9
                    elif joined[x]:
                        c = 10
                    joined[x] = True
        if c0 >= 0 and n_out < cap:
            out_idx[n_out] = i + 1
            out_code[n_out] = c0
            n_out += 1
        if c >= 0 and n_out < cap:
            out_idx[n_out] = i + 1
            out_code[n_out] = c
            n_out += 1
    return n_out


def validate_compiled(trace: Trace, limit: int = 64) -> list[tuple[int, str]]:
    """First ``limit`` violations as (idx, rule), same rules and order as the Python check."""
    idx = np.zeros(limit, np.int64)
    code = np.zeros(limit, np.int64)
    n = _validate(trace.threads, trace.kinds, trace.targets, trace.T, trace.V, trace.L, idx, code)
    return [(int(idx[i]), VIOLATION_RULES[code[i]]) for i in range(n)]


@nb.njit(cache=True)
def _racy_vars(th, kd, tg, T, V, clock, lw, last_r, last_w, racy):
    for i in range(th.shape[0]):
        t, k, x = th[i], kd[i], tg[i]
        if k <= _W:
            if not racy[x]:
                for u in range(T):
                    if u != t and (last_w[x, u] > clock[t, u] or (k == _W and last_r[x, u] > clock[t, u])):
                        racy[x] = True
                        break
            clock[t, t] += 1
            if k == _R:
                for j in range(T):
                    if lw[x, j] > clock[t, j]:
                        clock[t, j] = lw[x, j]
                last_r[x, t] = clock[t, t]
            else:
                for j in range(T):
                    lw[x, j] = clock[t, j]
                last_w[x, t] = clock[t, t]
        else:
            clock[t, t] += 1
            if k == _FORK:
                for j in range(T):
                    if clock[t, j] > clock[x, j]:
                        clock[x, j] = clock[t, j]
            elif k == _JOIN:
                for j in range(T):
                    if clock[x, j] > clock[t, j]:
                        clock[t, j] = clock[x, j]


def racy_vars_compiled(trace: Trace) -> np.ndarray:
    T, V = trace.T, trace.V
    racy = np.zeros(V, np.bool_)
    _racy_vars(trace.threads, trace.kinds, trace.targets, T, V,
               np.zeros((T, T), np.int32), np.zeros((V, T), np.int32),
               np.zeros((V, T), np.int32), np.zeros((V, T), np.int32), racy)
    return racy


# -- SyncP -----------------------------------------------------------------------


@nb.njit(cache=True)
def _prescan(th, kd, tg, T, V, L, acc_count, cs_count):
    for i in range(th.shape[0]):
        k = kd[i]
        if k <= _W:
            acc_count[(th[i] * 2 + k) * V + tg[i]] += 1
        elif k == _ACQ:
            cs_count[th[i] * L + tg[i]] += 1


@nb.njit(inline="always")
def _leq(a, b, T):
    for j in range(T):
        if a[j] > b[j]:
            return False
    return True


@nb.njit(inline="always")
def _join_into(dst, src, T):
    changed = False
    for j in range(T):
        if src[j] > dst[j]:
            dst[j] = src[j]
            changed = True
    return changed


@nb.njit(cache=True)
def _fixpoint(I, tup, T, L, lt, lt_n, cs_start, cs_len, cs_g, cs_acq, cs_rel, cs_hasrel,
              cs_off, cs_last, found_g, found_e):
    while True:
        changed = False
        for lock in range(L):
            n_t = lt_n[lock]
            if n_t == 0:
                continue
            g_max = 0
            t_max = -1
            for q in range(n_t):
                t = lt[lock, q]
                cid = t * L + lock
                base = cs_start[cid]
                n = cs_len[cid]
                off = cs_off[tup, t, lock]
                last = cs_last[tup, t, lock]
                while off < n and _leq(cs_acq[base + off], I, T):
                    last = base + off
                    off += 1
                cs_off[tup, t, lock] = off
                cs_last[tup, t, lock] = last
                found_e[q] = last
                g = cs_g[last] if last >= 0 else 0
                found_g[q] = g
                if g > g_max:
                    g_max = g
                    t_max = q
            for q in range(n_t):
                e = found_e[q]
                if found_g[q] > 0 and q != t_max:
                    if not cs_hasrel[e]:
                        raise AssertionError("open critical section below a later acquire")
                    if _join_into(I, cs_rel[e], T):
                        changed = True
        if not changed:
            return


@nb.njit(cache=True)
def _syncp(th, kd, tg, T, V, L,
           clock, lastw, g, lt, lt_n,
           acc_start, acc_len, acc_cprev, acc_c, acc_idx,
           cs_start, cs_len, cs_g, cs_acq, cs_rel, cs_hasrel,
           ideal, acc_off, cs_off, cs_last,
           rep_e1, rep_e2):
    n_rep = 0
    found_g = np.zeros(max(T, 1), np.int64)
    found_e = np.zeros(max(T, 1), np.int64)
    cprev = np.zeros(max(T, 1), np.int32)
    for i in range(th.shape[0]):
        t, k, x = th[i], kd[i], tg[i]
        idx = i + 1
        if k <= _W:
            for j in range(T):
                cprev[j] = clock[t, j]
            clock[t, t] += 1
            if k == _R:
                _join_into(clock[t], lastw[x], T)
            else:
                for j in range(T):
                    lastw[x, j] = clock[t, j]
            kid = (t * 2 + k) * V + x
            slot = acc_start[kid] + acc_len[kid]
            acc_len[kid] += 1
            for j in range(T):
                acc_cprev[slot, j] = cprev[j]
                acc_c[slot, j] = clock[t, j]
            acc_idx[slot] = idx
            best = -1
            for u in range(T):
                if u == t:
                    continue
                for c in range(3):
                    if _A2[c] != k:
                        continue
                    qid = (u * 2 + _A1[c]) * V + x
                    n = acc_len[qid]
                    if n == 0:
                        continue
                    tup = ((u * T + t) * 3 + c) * V + x
                    I = ideal[tup]
                    _join_into(I, cprev, T)
                    base = acc_start[qid]
                    off = acc_off[tup]
                    race = -1
                    while off < n:
                        _join_into(I, acc_cprev[base + off], T)
                        _fixpoint(I, tup, T, L, lt, lt_n, cs_start, cs_len, cs_g, cs_acq,
                                  cs_rel, cs_hasrel, cs_off, cs_last, found_g, found_e)
                        if not _leq(acc_c[base + off], I, T):
                            race = acc_idx[base + off]
                            break
                        off += 1
                    acc_off[tup] = off
                    if race >= 0 and (best < 0 or race < best):
                        best = race
            if best >= 0:
                rep_e1[n_rep] = best
                rep_e2[n_rep] = idx
                n_rep += 1
        elif k == _ACQ:
            clock[t, t] += 1
            g[x] += 1
            cid = t * L + x
            if cs_len[cid] == 0:
                lt[x, lt_n[x]] = t
                lt_n[x] += 1
            slot = cs_start[cid] + cs_len[cid]
            cs_len[cid] += 1
            cs_g[slot] = g[x]
            for j in range(T):
                cs_acq[slot, j] = clock[t, j]
        elif k == _REL:
            clock[t, t] += 1
            cid = t * L + x
            slot = cs_start[cid] + cs_len[cid] - 1
            for j in range(T):
                cs_rel[slot, j] = clock[t, j]
            cs_hasrel[slot] = True
        elif k == _FORK:
            clock[t, t] += 1
            _join_into(clock[x], clock[t], T)
        else:
            clock[t, t] += 1
            _join_into(clock[t], clock[x], T)
    return n_rep


def state_bytes(T: int, V: int, L: int, n_access: int, n_acquire: int) -> int:
    """Bytes of dense state the compiled detector allocates."""
    ntup = 3 * T * T * V
    return (4 * T * (2 * n_access + 2 * n_acquire) + 8 * (n_access + n_acquire) + n_acquire
            + ntup * (4 * T + 8 + 16 * T * L) + 16 * n_access)


class CompactReports(Sequence):
    """Reports held as two index arrays; RaceReport objects are built on access.

    Long traces can have millions of racy events, and materializing one object
    per report would cost more time and memory than the detection itself.
    """

    def __init__(self, trace: Trace, e1: np.ndarray, e2: np.ndarray):
        self.trace, self.e1, self.e2 = trace, e1, e2

    def __len__(self):
        return len(self.e2)

    def _make(self, a: int, b: int) -> RaceReport:
        t = self.trace
        la, lb = int(t.locs[a - 1]), int(t.locs[b - 1])
        return RaceReport(a, b, int(t.targets[b - 1]), (int(t.threads[a - 1]), int(t.threads[b - 1])),
                          (int(t.kinds[a - 1]), int(t.kinds[b - 1])),
                          (None if la < 0 else la, None if lb < 0 else lb))

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self._make(a, b) for a, b in zip(self.e1[i].tolist(), self.e2[i].tolist())]
        return self._make(int(self.e1[i]), int(self.e2[i]))

    def __iter__(self):
        for a, b in zip(self.e1.tolist(), self.e2.tolist()):
            yield self._make(a, b)

    def __eq__(self, other):
        if isinstance(other, CompactReports):
            return np.array_equal(self.e1, other.e1) and np.array_equal(self.e2, other.e2) \
                and self.trace is other.trace
        return isinstance(other, (list, tuple)) and list(self) == list(other)

    def __repr__(self):
        return f"CompactReports({len(self)} races)"


def run_compiled(trace: Trace) -> CompactReports:
    T, V, L = trace.T, trace.V, trace.L
    th, kd, tg = trace.threads, trace.kinds, trace.targets
    nacc_keys, ncs_keys = max(T * 2 * V, 1), max(T * L, 1)
    acc_count = np.zeros(nacc_keys, np.int64)
    cs_count = np.zeros(ncs_keys, np.int64)
    _prescan(th, kd, tg, T, V, L, acc_count, cs_count)
    n_acc, n_cs = int(acc_count.sum()), int(cs_count.sum())
    acc_start = np.zeros(nacc_keys, np.int64)
    acc_start[1:] = np.cumsum(acc_count)[:-1]
    cs_start = np.zeros(ncs_keys, np.int64)
    cs_start[1:] = np.cumsum(cs_count)[:-1]
    Tn = max(T, 1)
    ntup = max(3 * T * T * V, 1)
    rep_e1 = np.zeros(max(n_acc, 1), np.int64)
    rep_e2 = np.zeros(max(n_acc, 1), np.int64)
    n_rep = _syncp(
        th, kd, tg, T, V, L,
        np.zeros((Tn, Tn), np.int32), np.zeros((max(V, 1), Tn), np.int32),
        np.zeros(max(L, 1), np.int64), np.zeros((max(L, 1), Tn), np.int64),
        np.zeros(max(L, 1), np.int64),
        acc_start, np.zeros(nacc_keys, np.int64),
        np.zeros((max(n_acc, 1), Tn), np.int32), np.zeros((max(n_acc, 1), Tn), np.int32),
        np.zeros(max(n_acc, 1), np.int64),
        cs_start, np.zeros(ncs_keys, np.int64), np.zeros(max(n_cs, 1), np.int64),
        np.zeros((max(n_cs, 1), Tn), np.int32), np.zeros((max(n_cs, 1), Tn), np.int32),
        np.zeros(max(n_cs, 1), np.bool_),
        np.zeros((ntup, Tn), np.int32), np.zeros(ntup, np.int64),
        np.zeros((ntup, Tn, max(L, 1)), np.int64), np.full((ntup, Tn, max(L, 1)), -1, np.int64),
        rep_e1, rep_e2,
    )
    return CompactReports(trace, rep_e1[:n_rep].copy(), rep_e2[:n_rep].copy())
