"""Single-pass sync-preserving race detection with vector timestamps.

The detector keeps, per thread, the timestamp of its latest event; per
variable, the timestamp of the latest write; and two kinds of FIFO
histories that are shared between consumers:

* critical sections per (thread, lock): entries ``[g, C_acq, C_rel]``
* accesses per (thread, kind, variable): entries ``(C_prev, C, idx, loc)``

For every tuple (u, t, a1, a2, x) -- "earlier accesses of kind a1 by u against
later accesses of kind a2 by t on x" -- it keeps a growing ideal plus private
read offsets into those histories.  Because ideals only grow, each entry is
passed at most once per tuple, which gives the near-linear running time.

One departure from the textbook loop: the per-(tuple, thread, lock) view
remembers the last acquire it found inside the ideal even after moving past
it.  Dropping that entry (as a literal "remove while contained" loop does)
loses the release that must be joined once a later acquire from another
thread enters the ideal.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .trace_model import Kind, Trace, check_valid
from .vclock import VectorTimestamp, bottom, bump, join, leq

log = logging.getLogger(__name__)

R, W = int(Kind.READ), int(Kind.WRITE)
# kinds a1 of earlier accesses that conflict with a later access of kind a2
CONFLICTS = {R: (W,), W: (R, W)}


@dataclass(frozen=True, slots=True)
class RaceReport:
    e1: int
    e2: int
    var: int
    threads: tuple[int, int]
    kinds: tuple[int, int]
    locs: tuple[int | None, int | None]

    @property
    def distance(self) -> int:
        return self.e2 - self.e1


class _CS:
    __slots__ = ("g", "acq", "rel")

    def __init__(self, g: int, acq: VectorTimestamp):
        self.g, self.acq, self.rel = g, acq, None


class _View:
    """A consumer's position in a critical-section history."""

    __slots__ = ("off", "last")

    def __init__(self):
        self.off, self.last = 0, None


@dataclass
class WorkCounters:
    access_entries: int = 0
    access_consumed: int = 0
    access_inspections: int = 0
    cs_entries: int = 0
    cs_consumed: int = 0
    cs_inspections: int = 0
    fixpoint_rounds: int = 0


@dataclass
class SyncPState:
    n_threads: int
    n_locks: int
    n_vars: int
    clock: list = field(default_factory=list)
    last_write: list = field(default_factory=list)
    g: list = field(default_factory=list)
    cs_hist: dict = field(default_factory=dict)
    acc_hist: dict = field(default_factory=dict)
    ideal: dict = field(default_factory=dict)
    acc_off: dict = field(default_factory=dict)
    cs_view: dict = field(default_factory=dict)
    # lock -> threads that ever acquired it, in first-acquire order
    lock_threads: dict = field(default_factory=dict)
    work: WorkCounters = field(default_factory=WorkCounters)

    def __post_init__(self):
        bot = bottom(self.n_threads)
        self.clock = [bot] * self.n_threads
        self.last_write = [bot] * self.n_vars
        self.g = [0] * self.n_locks


class SyncPDetector:
    """Streaming detector; feed events through the ``on_*`` handlers in trace order."""

    def __init__(self, n_threads: int, n_locks: int, n_vars: int):
        self.state = SyncPState(n_threads, n_locks, n_vars)
        self.reports: list[RaceReport] = []
        self._bot = bottom(n_threads)
        self._n = 0

    # -- histories ----------------------------------------------------

    def max_lb(self, ideal: VectorTimestamp, hist: list, view: _View):
        """Last acquire of the history inside ``ideal``: (g, C_acq, C_rel) or (0, None, None)."""
        w = self.state.work
        off, last = view.off, view.last
        while off < len(hist):
            w.cs_inspections += 1
            if not leq(hist[off].acq, ideal):
                break
            last = hist[off]
            off += 1
            w.cs_consumed += 1
        view.off, view.last = off, last
        if last is None:
            return 0, None, None
        return last.g, last.acq, last.rel

    def fixpoint_ideal(self, ideal: VectorTimestamp, tup: tuple) -> VectorTimestamp:
        """Close ``ideal`` under: two same-lock acquires inside ⇒ earlier release inside."""
        st = self.state
        while True:
            st.work.fixpoint_rounds += 1
            changed = False
            for lock in sorted(st.lock_threads):
                found = []
                for t in st.lock_threads[lock]:
                    key = (tup, t, lock)
                    view = st.cs_view.get(key)
                    if view is None:
                        view = st.cs_view[key] = _View()
                    found.append((t, self.max_lb(ideal, st.cs_hist[(t, lock)], view)))
                t_max, g_max = -1, 0
                for t, (g, _, _) in found:
                    if g > g_max:
                        t_max, g_max = t, g
                for t, (g, _, rel) in found:
                    if g and t != t_max:
                        assert rel is not None, "open critical section below a later acquire"
                        if not leq(rel, ideal):
                            ideal = join(ideal, rel)
                            changed = True
            if not changed:
                return ideal

    def check_race(self, hist: list, ideal: VectorTimestamp, tup: tuple):
        """Consume non-racy pending accesses; stop at (and keep) the first racy one."""
        st = self.state
        off = st.acc_off.get(tup, 0)
        race = None
        while off < len(hist):
            st.work.access_inspections += 1
            cprev, c, _, _ = hist[off]
            ideal = self.fixpoint_ideal(join(ideal, cprev), tup)
            if not leq(c, ideal):
                race = hist[off]
                break
            off += 1
            st.work.access_consumed += 1
        st.acc_off[tup] = off
        return ideal, race

    # -- handlers -----------------------------------------------------

    def _next_idx(self, idx):
        self._n = self._n + 1 if idx is None else idx
        return self._n

    def _access(self, t: int, a: int, x: int, idx, loc) -> RaceReport | None:
        st = self.state
        idx = self._next_idx(idx)
        cprev = st.clock[t]
        c = bump(cprev, t)
        if a == R:
            c = join(c, st.last_write[x])
        else:
            st.last_write[x] = c
        st.clock[t] = c
        st.acc_hist.setdefault((t, a, x), []).append((cprev, c, idx, loc))
        st.work.access_entries += 1
        best = None
        best_kind = None
        for u in range(st.n_threads):
            if u == t:
                continue
            for a1 in CONFLICTS[a]:
                hist = st.acc_hist.get((u, a1, x))
                if not hist:
                    continue
                tup = (u, t, a1, a, x)
                ideal = join(st.ideal.get(tup, self._bot), cprev)
                ideal, race = self.check_race(hist, ideal, tup)
                st.ideal[tup] = ideal
                if race is not None and (best is None or race[2] < best[2]):
                    best, best_kind = race, (a1, u)
        if best is None:
            return None
        rep = RaceReport(best[2], idx, x, (best_kind[1], t), (best_kind[0], a), (best[3], loc))
        self.reports.append(rep)
        return rep

    def on_read(self, t: int, x: int, idx: int | None = None, loc: int | None = None):
        return self._access(t, R, x, idx, loc)

    def on_write(self, t: int, x: int, idx: int | None = None, loc: int | None = None):
        return self._access(t, W, x, idx, loc)

    def on_acquire(self, t: int, lock: int, idx: int | None = None):
        st = self.state
        self._next_idx(idx)
        st.clock[t] = bump(st.clock[t], t)
        st.g[lock] += 1
        key = (t, lock)
        if key not in st.cs_hist:
            st.cs_hist[key] = []
            st.lock_threads.setdefault(lock, []).append(t)
        st.cs_hist[key].append(_CS(st.g[lock], st.clock[t]))
        st.work.cs_entries += 1

    def on_release(self, t: int, lock: int, idx: int | None = None):
        st = self.state
        self._next_idx(idx)
        st.clock[t] = bump(st.clock[t], t)
        st.cs_hist[(t, lock)][-1].rel = st.clock[t]

    def on_fork(self, t: int, child: int, idx: int | None = None):
        st = self.state
        self._next_idx(idx)
        st.clock[t] = bump(st.clock[t], t)
        st.clock[child] = join(st.clock[child], st.clock[t])

    def on_join(self, t: int, child: int, idx: int | None = None):
        st = self.state
        self._next_idx(idx)
        st.clock[t] = join(bump(st.clock[t], t), st.clock[child])

    def feed(self, trace: Trace) -> list[RaceReport]:
        handlers = {
            Kind.READ: self.on_read, Kind.WRITE: self.on_write,
        }
        th, kd, tg = trace.thread_of, trace.kind_of, trace.target_of
        lc = trace._cols[3]
        for i in range(1, len(trace) + 1):
            k = kd[i]
            if k <= Kind.WRITE:
                handlers[k](th[i], tg[i], i, None if lc[i] < 0 else lc[i])
            elif k == Kind.ACQUIRE:
                self.on_acquire(th[i], tg[i], i)
            elif k == Kind.RELEASE:
                self.on_release(th[i], tg[i], i)
            elif k == Kind.FORK:
                self.on_fork(th[i], tg[i], i)
            else:
                self.on_join(th[i], tg[i], i)
        return self.reports


@dataclass
class RunResult:
    reports: list[RaceReport]
    wall_time: float
    engine: str
    work: WorkCounters | None = None


# traces at least this long go to the compiled kernel when it is usable
COMPILED_THRESHOLD = 20_000
# the compiled kernel preallocates dense state; above this it is not chosen automatically
COMPILED_MEMORY_BUDGET = 3 * 2**30


def _pick_engine(trace: Trace) -> str:
    if len(trace) < COMPILED_THRESHOLD:
        return "python"
    try:
        from . import _kernel
    except ImportError:  # pragma: no cover - numba missing
        log.warning("numba unavailable; using the python detector")
        return "python"
    n_access = int((trace.kinds <= Kind.WRITE).sum())
    need = _kernel.state_bytes(trace.T, trace.V, trace.L, n_access, trace.A)
    if need > COMPILED_MEMORY_BUDGET:
        log.warning("dense state would need %.1f GiB; using the python detector", need / 2**30)
        return "python"
    return "compiled"


def run(trace: Trace, engine: str = "auto", validate: bool = True) -> RunResult:
    """Report every event that has an earlier sync-preserving race partner.

    ``engine`` is "python" (reference streaming detector), "compiled" (numba
    kernel over dense arrays) or "auto".
    """
    if validate:
        check_valid(trace)
    if engine == "auto":
        engine = _pick_engine(trace)
    t0 = time.perf_counter()
    if engine == "compiled":
        from . import _kernel

        reports = _kernel.run_compiled(trace)
        work = None
    elif engine == "python":
        det = SyncPDetector(trace.T, trace.L, trace.V)
        reports = det.feed(trace)
        work = det.state.work
    else:
        raise ValueError(f"unknown engine {engine!r}")
    dt = time.perf_counter() - t0
    log.info("syncp (%s): %d events, %d racy, %.3fs", engine, len(trace), len(reports), dt)
    return RunResult(reports, dt, engine, work)
