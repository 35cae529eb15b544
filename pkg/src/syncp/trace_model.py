"""Execution traces: events, derived indexes and basic semantic queries.

Events are addressed by their 1-based position in the trace.  The trace keeps
its columns as numpy arrays (so the compiled detector can consume them
directly) and builds the per-thread / per-lock / per-variable indexes lazily.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class Kind(IntEnum):
    READ = 0
    WRITE = 1
    ACQUIRE = 2
    RELEASE = 3
    FORK = 4
    JOIN = 5


OP_TOKENS = ("r", "w", "acq", "rel", "fork", "join")
TOKEN_KIND = {tok: Kind(i) for i, tok in enumerate(OP_TOKENS)}

ACCESS_KINDS = (Kind.READ, Kind.WRITE)
LOCK_KINDS = (Kind.ACQUIRE, Kind.RELEASE)
THREAD_KINDS = (Kind.FORK, Kind.JOIN)

NO_LOC = -1


@dataclass(frozen=True, slots=True)
class Event:
    idx: int
    thread: int
    kind: Kind
    target: int
    loc: int | None = None

    @property
    def is_access(self) -> bool:
        return self.kind <= Kind.WRITE

    @property
    def op(self) -> str:
        return OP_TOKENS[self.kind]


@dataclass(frozen=True, slots=True)
class Violation:
    idx: int
    rule: str

    def __str__(self) -> str:
        return f"e{self.idx}: {self.rule}"


class TraceError(ValueError):
    """Raised when a trace is malformed or violates lock/fork semantics."""

    def __init__(self, message: str, violations: Sequence[Violation] = ()):
        super().__init__(message)
        self.violations = list(violations)


class Trace:
    """An immutable event sequence with interned thread/variable/lock names.

    ``origin`` optionally maps each event to its index in a larger trace it
    was projected from (the variable filter uses this so reports keep the
    original numbering).
    """

    def __init__(
        self,
        threads,
        kinds,
        targets,
        locs=None,
        thread_names: Sequence[str] = (),
        var_names: Sequence[str] = (),
        lock_names: Sequence[str] = (),
        origin=None,
    ):
        self.threads = np.asarray(threads, dtype=np.int32)
        self.kinds = np.asarray(kinds, dtype=np.int8)
        self.targets = np.asarray(targets, dtype=np.int32)
        n = len(self.threads)
        if locs is None:
            self.locs = np.full(n, NO_LOC, dtype=np.int64)
        else:
            self.locs = np.asarray(locs, dtype=np.int64)
        if not (len(self.kinds) == len(self.targets) == len(self.locs) == n):
            raise ValueError("trace columns have different lengths")
        self.origin = None if origin is None else np.asarray(origin, dtype=np.int64)

        def names(given, count, prefix):
            given = list(given)
            if len(given) < count:
                given += [f"{prefix}{i}" for i in range(len(given), count)]
            return given

        tmax = int(self.threads.max()) + 1 if n else 0
        fork_join = np.isin(self.kinds, (Kind.FORK, Kind.JOIN))
        if fork_join.any():
            tmax = max(tmax, int(self.targets[fork_join].max()) + 1)
        acc = self.kinds <= Kind.WRITE
        vmax = int(self.targets[acc].max()) + 1 if acc.any() else 0
        lk = (self.kinds == Kind.ACQUIRE) | (self.kinds == Kind.RELEASE)
        lmax = int(self.targets[lk].max()) + 1 if lk.any() else 0
        self.thread_names = names(thread_names, tmax, "t")
        self.var_names = names(var_names, vmax, "x")
        self.lock_names = names(lock_names, lmax, "l")

    # -- construction helpers -------------------------------------------

    @classmethod
    def from_records(cls, records: Iterable[tuple]) -> "Trace":
        """Build from ``(thread, op, target[, loc])`` name tuples, interning by first use."""
        tids: dict[str, int] = {}
        vids: dict[str, int] = {}
        lids: dict[str, int] = {}
        th, kd, tg, lc = [], [], [], []
        for rec in records:
            thread, op, target = rec[0], rec[1], rec[2]
            loc = rec[3] if len(rec) > 3 else None
            kind = TOKEN_KIND[op] if isinstance(op, str) else Kind(op)
            th.append(tids.setdefault(thread, len(tids)))
            if kind <= Kind.WRITE:
                tg.append(vids.setdefault(target, len(vids)))
            elif kind <= Kind.RELEASE:
                tg.append(lids.setdefault(target, len(lids)))
            else:
                tg.append(tids.setdefault(target, len(tids)))
            kd.append(int(kind))
            lc.append(NO_LOC if loc is None else int(loc))
        return cls(th, kd, tg, lc, list(tids), list(vids), list(lids))

    def records(self) -> list[tuple]:
        """Inverse of :meth:`from_records`."""
        out = []
        for e in self:
            if e.kind <= Kind.WRITE:
                name = self.var_names[e.target]
            elif e.kind <= Kind.RELEASE:
                name = self.lock_names[e.target]
            else:
                name = self.thread_names[e.target]
            out.append((self.thread_names[e.thread], e.op, name, e.loc))
        return out

    # -- sequence protocol ------------------------------------------------

    def __len__(self) -> int:
        return len(self.threads)

    def __getitem__(self, idx: int) -> Event:
        if not 1 <= idx <= len(self):
            raise IndexError(f"event index {idx} out of range 1..{len(self)}")
        i = idx - 1
        loc = int(self.locs[i])
        return Event(idx, int(self.threads[i]), Kind(int(self.kinds[i])), int(self.targets[i]),
                     None if loc < 0 else loc)

    def __iter__(self):
        th, kd, tg, lc = self._cols
        for i in range(1, len(self) + 1):
            loc = lc[i]
            yield Event(i, th[i], Kind(kd[i]), tg[i], None if loc < 0 else loc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return self.records() == other.records()

    def __repr__(self) -> str:
        return f"Trace(N={self.N}, T={self.T}, L={self.L}, V={self.V})"

    def source_idx(self, idx: int) -> int:
        """Index of event ``idx`` in the trace this one was projected from."""
        return idx if self.origin is None else int(self.origin[idx - 1])

    # -- counts -----------------------------------------------------------

    @property
    def N(self) -> int:
        return len(self)

    @property
    def T(self) -> int:
        return len(self.thread_names)

    @property
    def L(self) -> int:
        return len(self.lock_names)

    @property
    def V(self) -> int:
        return len(self.var_names)

    @property
    def A(self) -> int:
        return int(np.count_nonzero(self.kinds == Kind.ACQUIRE))

    # -- derived indexes (1-based lists with a dummy slot 0) ---------------

    @cached_property
    def _cols(self):
        return ([-1] + self.threads.tolist(), [-1] + self.kinds.tolist(),
                [-1] + self.targets.tolist(), [-1] + self.locs.tolist())

    @property
    def thread_of(self) -> list[int]:
        return self._cols[0]

    @property
    def kind_of(self) -> list[int]:
        return self._cols[1]

    @property
    def target_of(self) -> list[int]:
        return self._cols[2]

    @cached_property
    def per_thread(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.T)]
        th = self.thread_of
        for i in range(1, len(self) + 1):
            out[th[i]].append(i)
        return out

    @cached_property
    def prev(self) -> list[int]:
        """Latest earlier event of the same thread (0 when none)."""
        out = [0] * (len(self) + 1)
        for seq in self.per_thread:
            for a, b in zip(seq, seq[1:]):
                out[b] = a
        return out

    @cached_property
    def to_parents(self) -> list[tuple[int, ...]]:
        """Immediate thread-order predecessors, including fork/join edges."""
        th, kd, tg = self.thread_of, self.kind_of, self.target_of
        prev = self.prev
        out: list[tuple[int, ...]] = [()] * (len(self) + 1)
        last: dict[int, int] = {}
        fork_of: dict[int, int] = {}
        for i in range(1, len(self) + 1):
            ps = []
            if prev[i]:
                ps.append(prev[i])
            elif th[i] in fork_of:
                ps.append(fork_of[th[i]])
            if kd[i] == Kind.FORK:
                fork_of[tg[i]] = i
            elif kd[i] == Kind.JOIN and tg[i] in last:
                ps.append(last[tg[i]])
            last[th[i]] = i
            out[i] = tuple(ps)
        return out

    @cached_property
    def match(self) -> list[int]:
        """Acquire <-> matching release (0 for unmatched acquires)."""
        out = [0] * (len(self) + 1)
        open_acq: dict[tuple[int, int], int] = {}
        th, kd, tg = self.thread_of, self.kind_of, self.target_of
        for i in range(1, len(self) + 1):
            if kd[i] == Kind.ACQUIRE:
                open_acq[(th[i], tg[i])] = i
            elif kd[i] == Kind.RELEASE:
                a = open_acq.pop((th[i], tg[i]), 0)
                if a:
                    out[a], out[i] = i, a
        return out

    @cached_property
    def lw(self) -> list[int]:
        """Last write observed by each read (0 when none, or for non-reads)."""
        out = [0] * (len(self) + 1)
        cur = [0] * self.V
        kd, tg = self.kind_of, self.target_of
        for i in range(1, len(self) + 1):
            if kd[i] == Kind.READ:
                out[i] = cur[tg[i]]
            elif kd[i] == Kind.WRITE:
                cur[tg[i]] = i
        return out

    @cached_property
    def acquires_of_lock(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.L)]
        kd, tg = self.kind_of, self.target_of
        for i in range(1, len(self) + 1):
            if kd[i] == Kind.ACQUIRE:
                out[tg[i]].append(i)
        return out

    @cached_property
    def accesses_of_var(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.V)]
        kd, tg = self.kind_of, self.target_of
        for i in range(1, len(self) + 1):
            if kd[i] <= Kind.WRITE:
                out[tg[i]].append(i)
        return out

    @cached_property
    def held_locks(self) -> list[frozenset[int]]:
        """Locks held at each event; acquires and releases count as inside their section."""
        out: list[frozenset[int]] = [frozenset()] * (len(self) + 1)
        held: list[set[int]] = [set() for _ in range(self.T)]
        th, kd, tg = self.thread_of, self.kind_of, self.target_of
        for i in range(1, len(self) + 1):
            h = held[th[i]]
            if kd[i] == Kind.ACQUIRE:
                h.add(tg[i])
                out[i] = frozenset(h)
            elif kd[i] == Kind.RELEASE:
                out[i] = frozenset(h)
                h.discard(tg[i])
            else:
                out[i] = frozenset(h)
        return out

    def predecessors(self, idx: int) -> set[int]:
        """All strict thread-order predecessors of ``idx``."""
        seen: set[int] = set()
        stack = list(self.to_parents[idx])
        while stack:
            p = stack.pop()
            if p not in seen:
                seen.add(p)
                stack.extend(self.to_parents[p])
        return seen


# -- semantic queries -------------------------------------------------------


def conflicting(trace: Trace, e1: int, e2: int) -> bool:
    """Different threads, same variable, at least one write."""
    kd, th, tg = trace.kind_of, trace.thread_of, trace.target_of
    if kd[e1] > Kind.WRITE or kd[e2] > Kind.WRITE:
        return False
    return th[e1] != th[e2] and tg[e1] == tg[e2] and Kind.WRITE in (kd[e1], kd[e2])


def locks_held(trace: Trace, e: int) -> frozenset[int]:
    return trace.held_locks[e]


def last_write(trace: Trace, r: int) -> int | None:
    if trace.kind_of[r] != Kind.READ:
        raise ValueError(f"e{r} is not a read")
    return trace.lw[r] or None


def prev_of(trace: Trace, e: int) -> int | None:
    return trace.prev[e] or None


def match_of(trace: Trace, e: int) -> int | None:
    return trace.match[e] or None


def enabled(trace: Trace, prefix: set[int] | frozenset[int], e: int) -> bool:
    """``e`` is outside the (downward-closed) prefix and all its parents are in it."""
    return e not in prefix and all(p in prefix for p in trace.to_parents[e])


def is_prefix(trace: Trace, events) -> bool:
    """Downward closure under thread order."""
    s = set(events)
    return all(p in s for e in s for p in trace.to_parents[e])


# traces at least this long are checked by the compiled scan (first 64 violations)
COMPILED_VALIDATE_THRESHOLD = 50_000


def validate(trace: Trace) -> list[Violation]:
    """All lock-semantics and fork/join violations, in trace order."""
    if len(trace) >= COMPILED_VALIDATE_THRESHOLD:
        try:
            from ._kernel import validate_compiled
        except ImportError:  # pragma: no cover - numba missing
            pass
        else:
            return [Violation(i, rule) for i, rule in validate_compiled(trace)]
    out: list[Violation] = []
    holder: dict[int, tuple[int, int]] = {}  # lock -> (thread, acquire idx)
    started: set[int] = set()
    forked: set[int] = set()
    joined: set[int] = set()
    th, kd, tg = trace.thread_of, trace.kind_of, trace.target_of
    n_thr, n_var, n_lock = trace.T, trace.V, trace.L
    for i in range(1, len(trace) + 1):
        t, k, x = th[i], kd[i], tg[i]
        if not 0 <= k <= Kind.JOIN:
            out.append(Violation(i, "unknown event kind"))
            continue
        limit = n_var if k <= Kind.WRITE else n_lock if k <= Kind.RELEASE else n_thr
        if not 0 <= x < limit or not 0 <= t < n_thr:
            out.append(Violation(i, "target or thread id out of range"))
            continue
        if t in joined:
            out.append(Violation(i, "event of a thread after it was joined"))
        started.add(t)
        if k == Kind.ACQUIRE:
            if x in holder:
                if holder[x][0] == t:
                    out.append(Violation(i, "reentrant acquire"))
                else:
                    out.append(Violation(i, "acquire of a lock held by another thread"))
            else:
                holder[x] = (t, i)
        elif k == Kind.RELEASE:
            if holder.get(x, (None,))[0] != t:
                out.append(Violation(i, "release without matching acquire in thread"))
            else:
                del holder[x]
        elif k == Kind.FORK:
            if x == t:
                out.append(Violation(i, "fork of self"))
            elif x in forked:
                out.append(Violation(i, "thread forked twice"))
            elif x in started:
                out.append(Violation(i, "fork of an already-started thread"))
            forked.add(x)
        elif k == Kind.JOIN:
            if x == t:
                out.append(Violation(i, "join of self"))
            elif x in joined:
                out.append(Violation(i, "thread joined twice"))
            joined.add(x)
    return out


def check_valid(trace: Trace) -> Trace:
    violations = validate(trace)
    if violations:
        raise TraceError("; ".join(str(v) for v in violations[:5]), violations)
    return trace
