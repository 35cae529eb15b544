"""Trace synthesis: seeded random traces and the equality-language construction."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .trace_model import NO_LOC, Kind, Trace


@dataclass(frozen=True)
class GenConfig:
    n_events: int = 12
    n_threads: int = 3
    n_locks: int = 2
    n_vars: int = 2
    p_read: float = 0.3
    p_write: float = 0.3
    p_acquire: float = 0.2
    p_release: float = 0.2
    seed: int = 0
    fork_join: bool = False
    p_join: float = 0.03
    n_locs: int = 0  # when > 0, accesses get a random location id below this

    def __post_init__(self):
        probs = (self.p_read, self.p_write, self.p_acquire, self.p_release)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("event mix probabilities must be nonnegative and sum to 1")
        if self.n_events < 0 or self.n_threads < 1:
            raise ValueError("need n_events >= 0 and at least one thread")
        if self.n_locks == 0 and self.p_acquire + self.p_release > 0:
            raise ValueError("sync probability > 0 needs at least one lock")
        if self.n_vars == 0 and self.p_read + self.p_write > 0:
            raise ValueError("access probability > 0 needs at least one variable")
        if self.n_vars == 0 and self.n_locks == 0:
            raise ValueError("need at least one variable or lock")


def gen_random(cfg: GenConfig) -> Trace:
    """Well-formed random trace, deterministic in ``cfg.seed``.

    Steps pick a thread uniformly and an operation by the configured mix.
    Infeasible choices (acquire with every lock taken, release with none
    held) fall back to an access.  With ``fork_join`` the first thread forks
    every other thread right before its first event and occasionally joins
    one that holds no locks.
    """
    n, T = cfg.n_events, cfg.n_threads
    rng = np.random.default_rng(cfg.seed)
    thr = rng.integers(0, T, size=n).tolist()
    u = rng.random(n).tolist()
    pick = rng.integers(0, 1 << 30, size=n).tolist()
    locs = rng.integers(0, max(cfg.n_locs, 1), size=n).tolist()

    c_read = cfg.p_read
    c_write = c_read + cfg.p_write
    c_acq = c_write + cfg.p_acquire
    acc_read_share = cfg.p_read / (cfg.p_read + cfg.p_write) if cfg.p_read + cfg.p_write else 0.5
    V, L = cfg.n_vars, cfg.n_locks

    out_t = np.empty(n, dtype=np.int32)
    out_k = np.empty(n, dtype=np.int8)
    out_x = np.empty(n, dtype=np.int32)
    out_l = np.full(n, NO_LOC, dtype=np.int64)

    free = list(range(L))
    held: list[list[int]] = [[] for _ in range(T)]
    forked = [not cfg.fork_join or t == 0 for t in range(T)]
    dead = [False] * T
    i = 0
    step = 0
    while i < n:
        t, r, p = thr[step], u[step], pick[step]
        loc = locs[step]
        step = (step + 1) % n
        if dead[t]:
            t = 0
        if not forked[t]:
            out_t[i], out_k[i], out_x[i] = 0, Kind.FORK, t
            forked[t] = True
            i += 1
            if i == n:
                break
        if cfg.fork_join and t != 0 and not held[t] and r < cfg.p_join and i + 1 < n:
            out_t[i], out_k[i], out_x[i] = 0, Kind.JOIN, t
            dead[t] = True
            i += 1
            continue
        if r < c_write or (r >= c_acq and not held[t]) or (c_write <= r < c_acq and not free):
            if V == 0:
                # only locks exist: an acquire or a release is always possible
                if free:
                    lk = free.pop(p % len(free))
                    held[t].append(lk)
                    out_t[i], out_k[i], out_x[i] = t, Kind.ACQUIRE, lk
                else:
                    hs = held[t] or next(h for h in held if h)
                    owner = held.index(hs)
                    lk = hs.pop(p % len(hs))
                    free.append(lk)
                    out_t[i], out_k[i], out_x[i] = owner, Kind.RELEASE, lk
                i += 1
                continue
            if r < c_write:
                kind = Kind.READ if r < c_read else Kind.WRITE
            else:
                kind = Kind.READ if (p >> 20) % 1000 < acc_read_share * 1000 else Kind.WRITE
            out_t[i], out_k[i], out_x[i] = t, kind, p % V
            if cfg.n_locs > 0:
                out_l[i] = loc
        elif r < c_acq:
            lk = free.pop(p % len(free))
            held[t].append(lk)
            out_t[i], out_k[i], out_x[i] = t, Kind.ACQUIRE, lk
        else:
            lk = held[t].pop(p % len(held[t]))
            free.append(lk)
            free.sort()
            out_t[i], out_k[i], out_x[i] = t, Kind.RELEASE, lk
        i += 1
    return Trace(out_t, out_k, out_x, out_l,
                 [f"t{k + 1}" for k in range(T)], [f"x{k}" for k in range(V)],
                 [f"l{k}" for k in range(L)])


# -- equality language --------------------------------------------------------


def _log2(n: int) -> int:
    k = n.bit_length() - 1
    if n < 1 or 1 << k != n:
        raise ValueError(f"length {n} is not a power of two")
    return k


def subset_schedule(k: int) -> list[frozenset[int]]:
    """All subsets of {1..k}: cardinality ascending, then by bitmask value."""
    subsets = [frozenset(c) for size in range(k + 1) for c in combinations(range(1, k + 1), size)]
    return sorted(subsets, key=lambda s: (len(s), sum(1 << (i - 1) for i in s)))


def gen_equality(u: str, v: str, layout: str = "serial") -> Trace:
    """Two-thread trace with a predictable race iff the bit strings differ.

    Position i of thread 1 holds the A-locks of the i-th subset in the
    schedule and the B-locks of its complement; thread 2 holds exactly the
    A∪B locks thread 1 does not.  A 1-bit is a write (also guarded by lock
    c), a 0-bit a read, all on variable x.

    ``layout="serial"`` writes all of thread 1 and then all of thread 2 (the
    one-pass encoding of u#v).  There, only a mismatch at the first position
    yields a sync-preserving race; later mismatches are predictable races
    that need a critical section of thread 1 to be reordered.
    ``layout="interleaved"`` alternates position-i sections of the two
    threads, which makes every mismatch a sync-preserving race.
    """
    if layout not in ("serial", "interleaved"):
        raise ValueError(f"unknown layout {layout!r}")
    if len(u) != len(v):
        raise ValueError("u and v must have equal length")
    if set(u + v) - {"0", "1"}:
        raise ValueError("u and v must be bit strings")
    n = len(u)
    k = _log2(n)
    full = frozenset(range(1, k + 1))
    records: list[tuple] = []

    def emit(thread: str, locks: list[str], write: bool):
        if write:
            locks = locks + ["c"]
        for lk in locks:
            records.append((thread, "acq", lk))
        records.append((thread, "w" if write else "r", "x"))
        for lk in reversed(locks):
            records.append((thread, "rel", lk))

    schedule = subset_schedule(k)

    def one(i):
        a = schedule[i]
        emit("t1", [f"a{j}" for j in sorted(a)] + [f"b{j}" for j in sorted(full - a)], u[i] == "1")

    def two(i):
        a = schedule[i]
        # complement of thread 1's A∪B set, B-locks first
        emit("t2", [f"b{j}" for j in sorted(a)] + [f"a{j}" for j in sorted(full - a)], v[i] == "1")

    if layout == "serial":
        for i in range(n):
            one(i)
        for i in range(n):
            two(i)
    else:
        for i in range(n):
            one(i)
            two(i)
    return Trace.from_records(records)


def equality_access(trace: Trace, thread: int, i: int) -> int:
    """Index of the i-th (0-based) access of ``thread`` in an equality trace."""
    accesses = [e for e in trace.per_thread[thread] if trace.kind_of[e] <= Kind.WRITE]
    return accesses[i]
