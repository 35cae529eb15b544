"""Brute-force ground truth over correct reorderings.

Two tools live here:

* ``enumerate_correct_reorderings`` walks every correct reordering of a tiny
  trace (plain DFS, each sequence exactly once).
* A memoized reachability search over states (chosen set, last write per
  variable) that decides whether a target configuration is reachable.  It
  backs the race queries and rf-poset realizability.

The search takes some moves eagerly because they can never hurt: an enabled
read that sees its original write, a release, a fork or join, or a write that
is the last possible write to its variable while nobody pending still wants
the current value.  Each of these only adds options, so the search can commit
to them without branching.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .trace_model import Kind, Trace, conflicting

ENUM_DEFAULT_CAP = 14
ENUM_HARD_CAP = 20
RACE_DEFAULT_CAP = 24
DEFAULT_MAX_STATES = 2_000_000

_R, _W, _ACQ, _REL, _OTHER = 0, 1, 2, 3, 4


class OracleLimitError(RuntimeError):
    """The instance is larger than the configured brute-force budget."""


@dataclass
class SearchProblem:
    """Events 1..n grouped into chains (threads); reads carry the write they must see.

    ``want[e]`` is 0 for "no earlier write".  ``rank`` orders the acquires of
    each lock as in the original trace (used only for sync preservation).
    """

    n: int
    chains: list[list[int]]
    parents: list[int]  # bitmask of immediate predecessors
    kind: list[int]
    obj: list[int]  # variable for accesses, lock for acquire/release
    want: list[int]
    n_vars: int
    n_locks: int = 0
    release_of: list[int] = field(default_factory=list)  # acquire -> release (0 if none)
    rank: list[int] = field(default_factory=list)
    forbidden: int = 0
    required: int = 0
    sync_preserving: bool = False


class _Searcher:
    def __init__(self, p: SearchProblem, max_states: int):
        self.p = p
        self.max_states = max_states
        self.write_mask = [0] * p.n_vars
        self.reads_of = [[] for _ in range(p.n_vars)]
        self.req_reads = []
        self.req_acqs = []
        for e in range(1, p.n + 1):
            k = p.kind[e]
            if k == _W:
                self.write_mask[p.obj[e]] |= 1 << e
            elif k == _R:
                self.reads_of[p.obj[e]].append(e)
                if p.required >> e & 1:
                    self.req_reads.append(e)
            elif k == _ACQ and p.required >> e & 1:
                self.req_acqs.append(e)
        self.states = 0

    # state = [S, lwc(list), pos(list), held(list), top(list)]

    def _apply(self, st, e):
        p = self.p
        st[0] |= 1 << e
        k = p.kind[e]
        if k == _W:
            st[1][p.obj[e]] = e
        elif k == _ACQ:
            st[3][p.obj[e]] = e
            st[4][p.obj[e]] = p.rank[e]
        elif k == _REL:
            st[3][p.obj[e]] = 0

    def _safe_write(self, st, e) -> bool:
        p = self.p
        S, lwc = st[0], st[1]
        x = p.obj[e]
        if self.write_mask[x] & ~(1 << e) & ~S & ~p.forbidden:
            return False
        cur = lwc[x]
        for r in self.reads_of[x]:
            if p.want[r] == cur and not (S >> r & 1) and not (p.forbidden >> r & 1):
                return False
        return True

    def _close(self, st, trail):
        """Apply safe moves until none is left."""
        p = self.p
        progress = True
        while progress:
            progress = False
            for c, chain in enumerate(p.chains):
                while st[2][c] < len(chain):
                    e = chain[st[2][c]]
                    if p.forbidden >> e & 1 or p.parents[e] & ~st[0]:
                        break
                    k = p.kind[e]
                    if k == _R:
                        ok = st[1][p.obj[e]] == p.want[e]
                    elif k == _REL or k == _OTHER:
                        ok = True
                    elif k == _W:
                        ok = self._safe_write(st, e)
                    else:
                        ok = False
                    if not ok:
                        break
                    self._apply(st, e)
                    st[2][c] += 1
                    trail.append(e)
                    progress = True

    def _dead(self, st) -> bool:
        p = self.p
        S, lwc, held, top = st[0], st[1], st[3], st[4]
        for r in self.req_reads:
            if S >> r & 1:
                continue
            w = p.want[r]
            if lwc[p.obj[r]] != w and (w == 0 or S >> w & 1):
                return True
        for a in self.req_acqs:
            if S >> a & 1:
                continue
            lk = p.obj[a]
            h = held[lk]
            if h:
                rel = p.release_of[h]
                if rel == 0 or p.forbidden >> rel & 1:
                    return True
            if p.sync_preserving and p.rank[a] < top[lk]:
                return True
        return False

    def run(self, want_witness: bool = True):
        p = self.p
        st = [0, [0] * p.n_vars, [0] * len(p.chains), [0] * p.n_locks, [-1] * p.n_locks]
        trail: list[int] = []
        self._close(st, trail)
        if self._dead(st):
            return None
        key0 = (st[0], tuple(st[1]))
        parent = {key0: (None, tuple(trail))} if want_witness else None
        seen = {key0}
        stack = [(st, key0)]
        while stack:
            st, key = stack.pop()
            if st[0] & p.required == p.required:
                return self._path(parent, key) if want_witness else []
            for c, chain in enumerate(p.chains):
                if st[2][c] >= len(chain):
                    continue
                e = chain[st[2][c]]
                if p.forbidden >> e & 1 or p.parents[e] & ~st[0]:
                    continue
                k = p.kind[e]
                if k == _W:
                    pass
                elif k == _ACQ:
                    lk = p.obj[e]
                    if st[3][lk] or (p.sync_preserving and p.rank[e] < st[4][lk]):
                        continue
                else:
                    # reads that see the wrong write stay blocked; others were taken eagerly
                    continue
                nst = [st[0], list(st[1]), list(st[2]), list(st[3]), list(st[4])]
                self._apply(nst, e)
                nst[2][c] += 1
                trail = [e]
                self._close(nst, trail)
                nkey = (nst[0], tuple(nst[1]))
                if nkey in seen or self._dead(nst):
                    continue
                seen.add(nkey)
                self.states += 1
                if self.states > self.max_states:
                    raise OracleLimitError(f"state budget of {self.max_states} exceeded")
                if want_witness:
                    parent[nkey] = (key, tuple(trail))
                stack.append((nst, nkey))
        return None

    @staticmethod
    def _path(parent, key) -> list[int]:
        parts = []
        while key is not None:
            key, trail = parent[key]
            parts.append(trail)
        return [e for trail in reversed(parts) for e in trail]


def solve(problem: SearchProblem, max_states: int = DEFAULT_MAX_STATES,
          want_witness: bool = True) -> list[int] | None:
    """A schedule reaching a state that contains all required events, or None."""
    return _Searcher(problem, max_states).run(want_witness)


# -- traces -----------------------------------------------------------------


def _kind_code(k: int) -> int:
    return {Kind.READ: _R, Kind.WRITE: _W, Kind.ACQUIRE: _ACQ, Kind.RELEASE: _REL}.get(Kind(k), _OTHER)


def _trace_problem(trace: Trace, sync_preserving: bool) -> SearchProblem:
    n = len(trace)
    parents = [0] * (n + 1)
    for e in range(1, n + 1):
        for q in trace.to_parents[e]:
            parents[e] |= 1 << q
    kind = [_OTHER] + [_kind_code(k) for k in trace.kind_of[1:]]
    rank = [0] * (n + 1)
    for acqs in trace.acquires_of_lock:
        for i, a in enumerate(acqs):
            rank[a] = i
    release_of = [0] * (n + 1)
    for e in range(1, n + 1):
        if kind[e] == _ACQ:
            release_of[e] = trace.match[e]
    return SearchProblem(
        n=n, chains=[list(c) for c in trace.per_thread], parents=parents, kind=kind,
        obj=list(trace.target_of), want=list(trace.lw), n_vars=trace.V, n_locks=trace.L,
        release_of=release_of, rank=rank, sync_preserving=sync_preserving,
    )


def _successors_closed(trace: Trace, seeds) -> int:
    children = [[] for _ in range(len(trace) + 1)]
    for e in range(1, len(trace) + 1):
        for q in trace.to_parents[e]:
            children[q].append(e)
    mask, stack = 0, list(seeds)
    while stack:
        e = stack.pop()
        if mask >> e & 1:
            continue
        mask |= 1 << e
        stack.extend(children[e])
    return mask


def _necessary(trace: Trace, seeds) -> int:
    """Events every reordering enabling the seeds' successors must contain."""
    mask, stack = 0, list(seeds)
    while stack:
        e = stack.pop()
        if mask >> e & 1:
            continue
        mask |= 1 << e
        stack.extend(trace.to_parents[e])
        if trace.lw[e]:
            stack.append(trace.lw[e])
    return mask


def race_witness_bf(trace: Trace, e1: int, e2: int, sync_preserving: bool = False,
                    max_events: int = RACE_DEFAULT_CAP,
                    max_states: int = DEFAULT_MAX_STATES) -> list[int] | None:
    """A correct reordering leaving both events enabled, or None."""
    if len(trace) > max_events:
        raise OracleLimitError(f"trace has {len(trace)} events, cap is {max_events}")
    if e1 == e2:
        return None
    p = _trace_problem(trace, sync_preserving)
    p.forbidden = _successors_closed(trace, (e1, e2))
    p.required = _necessary(trace, trace.to_parents[e1] + trace.to_parents[e2])
    if p.required & p.forbidden:
        return None
    return solve(p, max_states)


def _race_bf(trace, e1, e2, sync_preserving, max_events, max_states) -> bool:
    # the cap applies even to pairs that are trivially not races
    if len(trace) > max_events:
        raise OracleLimitError(f"trace has {len(trace)} events, cap is {max_events}")
    if not conflicting(trace, e1, e2):
        return False
    return race_witness_bf(trace, e1, e2, sync_preserving, max_events, max_states) is not None


def is_predictable_race_bf(trace: Trace, e1: int, e2: int, max_events: int = RACE_DEFAULT_CAP,
                           max_states: int = DEFAULT_MAX_STATES) -> bool:
    return _race_bf(trace, e1, e2, False, max_events, max_states)


def is_syncp_race_bf(trace: Trace, e1: int, e2: int, max_events: int = RACE_DEFAULT_CAP,
                     max_states: int = DEFAULT_MAX_STATES) -> bool:
    return _race_bf(trace, e1, e2, True, max_events, max_states)


def racy_partners_bf(trace: Trace, sync_preserving: bool = True,
                     max_events: int = RACE_DEFAULT_CAP) -> dict[int, int]:
    """Earliest partner of every racy later event, by brute force."""
    if len(trace) > max_events:
        raise OracleLimitError(f"trace has {len(trace)} events, cap is {max_events}")
    check = is_syncp_race_bf if sync_preserving else is_predictable_race_bf
    out = {}
    for xs in trace.accesses_of_var:
        for j, e2 in enumerate(xs):
            for e1 in xs[:j]:
                if conflicting(trace, e1, e2) and check(trace, e1, e2, max_events):
                    out[e2] = e1
                    break
    return dict(sorted(out.items()))


# -- enumeration --------------------------------------------------------------


def check_reordering(trace: Trace, seq: Sequence[int], sync_preserving: bool = False) -> list[str]:
    """Violations of the correct-reordering conditions (empty when fine)."""
    problems = []
    pos = {e: i for i, e in enumerate(seq)}
    if len(pos) != len(seq):
        problems.append("repeated event")
    for e in seq:
        if not 1 <= e <= len(trace):
            problems.append(f"e{e} not in trace")
            return problems
        for q in trace.to_parents[e]:
            if q not in pos or pos[q] > pos[e]:
                problems.append(f"e{e} before its thread-order predecessor e{q}")
    holder: dict[int, int] = {}
    last: dict[int, int] = {}
    last_acq: dict[int, int] = {}
    kd, tg, th = trace.kind_of, trace.target_of, trace.thread_of
    for e in seq:
        k, x = kd[e], tg[e]
        if k == Kind.READ and last.get(x, 0) != trace.lw[e]:
            problems.append(f"e{e} reads a different write")
        elif k == Kind.WRITE:
            last[x] = e
        elif k == Kind.ACQUIRE:
            if x in holder:
                problems.append(f"e{e} acquires a held lock")
            holder[x] = th[e]
            if sync_preserving and last_acq.get(x, 0) > e:
                problems.append(f"e{e} reverses critical sections")
            last_acq[x] = max(last_acq.get(x, 0), e)
        elif k == Kind.RELEASE:
            if holder.get(x) != th[e]:
                problems.append(f"e{e} releases a lock it does not hold")
            holder.pop(x, None)
    return problems


def _check_cap(trace: Trace, max_events: int) -> None:
    if max_events > ENUM_HARD_CAP:
        raise OracleLimitError(f"enumeration cap {max_events} exceeds the hard limit {ENUM_HARD_CAP}")
    if len(trace) > max_events:
        raise OracleLimitError(f"trace has {len(trace)} events, cap is {max_events}")


def enumerate_correct_reorderings(trace: Trace, max_events: int = ENUM_DEFAULT_CAP,
                                  sync_preserving: bool = False,
                                  self_check: bool = True) -> Iterator[tuple[int, ...]]:
    """Yield every correct reordering (including the empty one) exactly once."""
    _check_cap(trace, max_events)
    n = len(trace)
    parents = trace.to_parents
    kd, tg, lw = trace.kind_of, trace.target_of, trace.lw
    chosen = [False] * (n + 1)
    lastw = [0] * trace.V
    held = [0] * trace.L
    top = [0] * trace.L
    seq: list[int] = []

    def moves():
        for e in range(1, n + 1):
            if chosen[e] or not all(chosen[q] for q in parents[e]):
                continue
            k, x = kd[e], tg[e]
            if k == Kind.READ and lastw[x] != lw[e]:
                continue
            if k == Kind.ACQUIRE and (held[x] or (sync_preserving and top[x] > e)):
                continue
            yield e

    def rec():
        out = tuple(seq)
        if self_check:
            bad = check_reordering(trace, out, sync_preserving)
            assert not bad, bad
        yield out
        for e in list(moves()):
            k, x = kd[e], tg[e]
            saved = (lastw[x] if k <= Kind.WRITE else None,
                     (held[x], top[x]) if k in (Kind.ACQUIRE, Kind.RELEASE) else None)
            chosen[e] = True
            seq.append(e)
            if k == Kind.WRITE:
                lastw[x] = e
            elif k == Kind.ACQUIRE:
                held[x], top[x] = e, max(top[x], e)
            elif k == Kind.RELEASE:
                held[x] = 0
            yield from rec()
            seq.pop()
            chosen[e] = False
            if k == Kind.WRITE:
                lastw[x] = saved[0]
            elif saved[1] is not None:
                held[x], top[x] = saved[1]

    yield from rec()


def count_correct_reorderings(trace: Trace, max_events: int = ENUM_DEFAULT_CAP,
                              sync_preserving: bool = False) -> int:
    """Number of correct reorderings, memoized on (chosen set, last writes)."""
    _check_cap(trace, max_events)
    p = _trace_problem(trace, sync_preserving)
    memo: dict = {}

    def count(S, lwc, held, top):
        key = (S, lwc)
        if key in memo:
            return memo[key]
        total = 1
        for e in range(1, p.n + 1):
            if S >> e & 1 or p.parents[e] & ~S:
                continue
            k, x = p.kind[e], p.obj[e]
            if k == _R and lwc[x] != p.want[e]:
                continue
            if k == _ACQ and (held[x] or (p.sync_preserving and p.rank[e] < top[x])):
                continue
            nl, nh, nt = lwc, held, top
            if k == _W:
                nl = lwc[:x] + (e,) + lwc[x + 1:]
            elif k == _ACQ:
                nh = held[:x] + (e,) + held[x + 1:]
                nt = top[:x] + (p.rank[e],) + top[x + 1:]
            elif k == _REL:
                nh = held[:x] + (0,) + held[x + 1:]
            total += count(S | 1 << e, nl, nh, nt)
        memo[key] = total
        return total

    return count(0, (0,) * p.n_vars, (0,) * p.n_locks, (-1,) * p.n_locks)


def race_pairs_enum(trace: Trace, sync_preserving: bool = True,
                    max_events: int = ENUM_DEFAULT_CAP) -> set[tuple[int, int]]:
    """Every conflicting pair left enabled by some enumerated reordering."""
    pairs = set()
    n = len(trace)
    accesses = [e for e in range(1, n + 1) if trace.kind_of[e] <= Kind.WRITE]
    for rho in enumerate_correct_reorderings(trace, max_events, sync_preserving, self_check=False):
        s = set(rho)
        en = [e for e in accesses if e not in s and all(q in s for q in trace.to_parents[e])]
        for i, a in enumerate(en):
            for b in en[i + 1:]:
                if conflicting(trace, a, b):
                    pairs.add((min(a, b), max(a, b)))
    return pairs


def racy_partners_enum(trace: Trace, sync_preserving: bool = True,
                       max_events: int = ENUM_DEFAULT_CAP) -> dict[int, int]:
    """Earliest partners read off a full enumeration (independent of the search)."""
    out: dict[int, int] = {}
    for e1, e2 in sorted(race_pairs_enum(trace, sync_preserving, max_events)):
        out.setdefault(e2, e1)
    return dict(sorted(out.items()))
