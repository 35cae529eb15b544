"""Rf-posets: realizability by brute force and the two hardness reductions.

An rf-poset is a set of read/write events with a partial order (thread order
plus explicit cross edges) and a reads-from map.  It is realizable when some
linearization makes every read observe its reads-from write.

The reductions go rf-poset -> reverse instance (gadget threads per dominant
pair, plus a distinguished triplet whose two writes must be reversed) ->
trace whose (w(y), r(y)) pair is a predictable race iff the reversal exists.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter

from .oracle_bf import _R, _W, DEFAULT_MAX_STATES, OracleLimitError, SearchProblem, solve
from .trace_model import Trace

REALIZE_DEFAULT_CAP = 12


@dataclass(frozen=True)
class RfEvent:
    id: int
    thread: str
    op: str  # "r" or "w"
    var: str


class NormalizationError(ValueError):
    """The poset cannot be brought into the shape the reductions need."""


class RfPoset:
    """Events, explicit order edges, reads-from map and an optional distinguished triplet.

    Thread order is the order in which a thread's events appear in ``events``;
    the partial order is the transitive closure of thread order and ``order``.
    """

    def __init__(self, events, order, rf, lam=None):
        self.events: list[RfEvent] = list(events)
        self.order: list[tuple[int, int]] = [tuple(p) for p in order]
        self.rf: dict[int, int] = dict(rf)
        self.distinguished = tuple(lam) if lam is not None else None
        self.by_id = {e.id: e for e in self.events}
        if len(self.by_id) != len(self.events):
            raise ValueError("duplicate event id")
        self.pos = {e.id: i for i, e in enumerate(self.events)}
        self.threads: list[str] = list(dict.fromkeys(e.thread for e in self.events))
        self.thread_events = {t: [e.id for e in self.events if e.thread == t] for t in self.threads}
        for e in self.events:
            if e.op not in ("r", "w"):
                raise ValueError(f"event {e.id}: op must be 'r' or 'w'")
        for a, b in self.order:
            if a not in self.by_id or b not in self.by_id:
                raise ValueError(f"order edge ({a}, {b}) names an unknown event")
        for e in self.events:
            if e.op == "r" and e.id not in self.rf:
                raise ValueError(f"read {e.id} has no reads-from write")
        for r, w in self.rf.items():
            er, ew = self.by_id.get(r), self.by_id.get(w)
            if er is None or ew is None or er.op != "r" or ew.op != "w" or er.var != ew.var:
                raise ValueError(f"reads-from {r} -> {w} is not a read of a write to the same variable")
        self._below = self._closure()
        if self.distinguished is not None:
            w, r, wp = self.distinguished
            ok = (r in self.rf and self.rf[r] == w and wp in self.by_id
                  and self.by_id[wp].op == "w" and self.by_id[wp].var == self.by_id[w].var
                  and self.by_id[wp].thread != self.by_id[w].thread)
            if not ok:
                raise ValueError("distinguished events do not form an rf-triplet")

    def _closure(self) -> list[int]:
        """Bitmask (over positions) of strict predecessors of each event."""
        preds: dict[int, set[int]] = {i: set() for i in range(len(self.events))}
        for evs in self.thread_events.values():
            for a, b in zip(evs, evs[1:]):
                preds[self.pos[b]].add(self.pos[a])
        for a, b in self.order:
            preds[self.pos[b]].add(self.pos[a])
        try:
            topo = list(TopologicalSorter(preds).static_order())
        except CycleError:
            raise ValueError("order is cyclic") from None
        below = [0] * len(self.events)
        for i in topo:
            m = 0
            for q in preds[i]:
                m |= below[q] | 1 << q
            below[i] = m
        return below

    def less(self, a: int, b: int) -> bool:
        """a <P b (strict)."""
        return bool(self._below[self.pos[b]] >> self.pos[a] & 1)

    def leq(self, a: int, b: int) -> bool:
        return a == b or self.less(a, b)

    def triplets(self):
        """All (w, r, w') with RF(r) = w and w' a write to the same variable in another thread."""
        for r, w in sorted(self.rf.items()):
            ew = self.by_id[w]
            for e in self.events:
                if e.op == "w" and e.var == ew.var and e.thread != ew.thread:
                    yield (w, r, e.id)

    def with_edges(self, extra) -> "RfPoset":
        return RfPoset(self.events, self.order + list(extra), self.rf, self.distinguished)

    def __len__(self):
        return len(self.events)

    def __repr__(self):
        return f"RfPoset({len(self.events)} events, {len(self.threads)} threads, {len(self.order)} edges)"


def dominant_pairs(poset: RfPoset) -> list[tuple[int, int]]:
    """Cross-thread pairs e1 <P e2 that no tighter pair of the same two threads implies."""
    out = []
    for ti in poset.threads:
        for tj in poset.threads:
            if ti == tj:
                continue
            xi, xj = poset.thread_events[ti], poset.thread_events[tj]
            ordered = [(a, b) for a in xi for b in xj if poset.less(a, b)]
            for a, b in ordered:
                if not any((a2, b2) != (a, b) and poset.leq(a, a2) and poset.leq(b2, b)
                           for a2, b2 in ordered):
                    out.append((a, b))
    return out


# -- brute force --------------------------------------------------------------


def _problem(poset: RfPoset) -> tuple[SearchProblem, list[int]]:
    ids = [e.id for e in poset.events]
    num = {eid: i + 1 for i, eid in enumerate(ids)}
    n = len(ids)
    var_ids = {v: i for i, v in enumerate(dict.fromkeys(e.var for e in poset.events))}
    parents = [0] * (n + 1)
    for a, b in poset.order:
        parents[num[b]] |= 1 << num[a]
    kind = [0] + [_R if e.op == "r" else _W for e in poset.events]
    obj = [0] + [var_ids[e.var] for e in poset.events]
    want = [0] * (n + 1)
    for r, w in poset.rf.items():
        want[num[r]] = num[w]
    chains = [[num[i] for i in poset.thread_events[t]] for t in poset.threads]
    full = ((1 << (n + 1)) - 1) & ~1
    p = SearchProblem(n=n, chains=chains, parents=parents, kind=kind, obj=obj, want=want,
                      n_vars=max(len(var_ids), 1), required=full)
    return p, ids


def realizability_bf(poset: RfPoset, max_events: int = REALIZE_DEFAULT_CAP,
                     max_states: int = DEFAULT_MAX_STATES) -> list[int] | None:
    """A linearization (event ids) whose reads all see their reads-from write, or None."""
    if len(poset) > max_events:
        raise OracleLimitError(f"rf-poset has {len(poset)} events, cap is {max_events}")
    p, ids = _problem(poset)
    seq = solve(p, max_states)
    return None if seq is None else [ids[i - 1] for i in seq]


def realizes(poset: RfPoset, seq) -> bool:
    """Does ``seq`` linearize the poset and reproduce its reads-from map?"""
    if sorted(seq) != sorted(e.id for e in poset.events):
        return False
    at = {e: i for i, e in enumerate(seq)}
    for b in poset.by_id:
        for a in poset.by_id:
            if poset.less(a, b) and at[a] > at[b]:
                return False
    last: dict[str, int] = {}
    for e in seq:
        ev = poset.by_id[e]
        if ev.op == "w":
            last[ev.var] = e
        elif last.get(ev.var) != poset.rf[e]:
            return False
    return True


def reverse_realizability_bf(poset: RfPoset, max_events: int = REALIZE_DEFAULT_CAP,
                             max_states: int = DEFAULT_MAX_STATES) -> bool:
    """Is there a realizing linearization that puts w̄ before w̄'?"""
    if poset.distinguished is None:
        raise ValueError("reverse realizability needs a distinguished triplet")
    w, _, wp = poset.distinguished
    try:
        forced = poset.with_edges([(w, wp)])
    except ValueError:  # w̄' <P w̄ already
        return False
    return realizability_bf(forced, max_events, max_states) is not None


# -- normalization -------------------------------------------------------------


def normalize(poset: RfPoset) -> RfPoset:
    """Project onto triplet events after checking every read sees a local write.

    Each read must observe the latest earlier write to its variable in its
    own thread; anything else is rejected.  Reads-from edges are added before
    projecting so that no ordering is lost.
    """
    for r, w in poset.rf.items():
        er, ew = poset.by_id[r], poset.by_id[w]
        if er.thread != ew.thread:
            raise NormalizationError(f"read {r} observes write {w} of another thread")
        evs = poset.thread_events[er.thread]
        before = evs[:evs.index(r)]
        if w not in before:
            raise NormalizationError(f"read {r} observes a later write {w}")
        local = [e for e in before if poset.by_id[e].op == "w" and poset.by_id[e].var == er.var]
        if local[-1] != w:
            raise NormalizationError(f"read {r} skips the local write {local[-1]}")
    keep = set()
    for w, r, wp in poset.triplets():
        keep.update((w, r, wp))
    if poset.distinguished:
        keep.update(poset.distinguished)
    events = [e for e in poset.events if e.id in keep]
    order = [(a, b) for a in keep for b in keep if poset.less(a, b)
             and poset.by_id[a].thread != poset.by_id[b].thread]
    order.sort()
    rf = {r: w for r, w in poset.rf.items() if r in keep}
    return RfPoset(events, order, rf, poset.distinguished)


def is_normalized(poset: RfPoset) -> bool:
    try:
        return len(normalize(poset)) == len(poset)
    except NormalizationError:
        return False


# -- reverse instance ------------------------------------------------------------


@dataclass
class ReverseInstance:
    poset: RfPoset  # carries the distinguished triplet
    witness: list[int]  # realizes poset with w̄' before w̄
    pairs: list[tuple[int, int]]  # dominant pairs of the input poset


def build_reverse_instance(poset: RfPoset, gadget_layout: str = "split") -> ReverseInstance:
    """Gadget construction: realizable input ⇔ reversible distinguished triplet.

    Per dominant pair (e1, e2) of threads (i, j) a fresh triplet is added:
    w, r in thread X_i^j and w' in thread Y_i^j, with e1 < r, w' < e2,
    w < r̄ and w̄' < w'.  Cross edges of the input are not kept.

    ``gadget_layout`` fixes the order inside X_i^j.  "split" puts all gadget
    writes before all gadget reads.  "chained" alternates w, r per gadget;
    together with w < r̄ < w̄' < w' that forces e1 of every non-final gadget
    before e2 of every gadget, so a realizable input can come out
    irreversible.
    """
    if gadget_layout not in ("split", "chained"):
        raise ValueError(f"unknown gadget layout {gadget_layout!r}")
    if not is_normalized(poset):
        raise NormalizationError("input must be normalized (see normalize)")
    pairs = dominant_pairs(poset)
    names = {e.thread for e in poset.events}
    vars_ = {e.var for e in poset.events}

    def fresh(base, used):
        name = base
        while name in used:
            name += "'"
        used.add(name)
        return name

    nid = max((e.id for e in poset.events), default=0) + 1
    events = list(poset.events)
    order: list[tuple[int, int]] = []
    rf = dict(poset.rf)
    x_threads: dict[tuple[str, str], list[tuple[RfEvent, RfEvent]]] = {}
    y_threads: dict[tuple[str, str], list[RfEvent]] = {}
    lam_var = fresh("lam", vars_)
    w_bar, r_bar, wp_bar = nid, nid + 1, nid + 2
    nid += 3
    for a, b in pairs:
        key = (poset.by_id[a].thread, poset.by_id[b].thread)
        v = fresh(f"g{a}_{b}", vars_)
        gw, gr, gwp = nid, nid + 1, nid + 2
        nid += 3
        x_threads.setdefault(key, []).append((RfEvent(gw, "", "w", v), RfEvent(gr, "", "r", v)))
        y_threads.setdefault(key, []).append(RfEvent(gwp, "", "w", v))
        rf[gr] = gw
        order += [(a, gr), (gwp, b), (gw, r_bar), (wp_bar, gwp)]
    # dominant pairs of one thread pair are increasing in both events, so
    # listing gadgets in discovery order respects thread order on both sides
    x_names, y_names = [], []
    for key, ws_rs in x_threads.items():
        name = fresh(f"X[{key[0]},{key[1]}]", names)
        x_names.append(name)
        if gadget_layout == "split":
            seq = [w for w, _ in ws_rs] + [r for _, r in ws_rs]
        else:
            seq = [e for pair in ws_rs for e in pair]
        events += [RfEvent(e.id, name, e.op, e.var) for e in seq]
    for key, wps in y_threads.items():
        name = fresh(f"Y[{key[0]},{key[1]}]", names)
        y_names.append(name)
        events += [RfEvent(e.id, name, e.op, e.var) for e in wps]
    lam_t, lamp_t = fresh("lam", names), fresh("lam'", names)
    events += [RfEvent(w_bar, lam_t, "w", lam_var), RfEvent(r_bar, lam_t, "r", lam_var),
               RfEvent(wp_bar, lamp_t, "w", lam_var)]
    rf[r_bar] = w_bar
    out = RfPoset(events, order, rf, (w_bar, r_bar, wp_bar))
    # w̄' first, then interfering gadget writes, each input thread in one run
    # (its reads see local writes), gadget writes and reads, finally w̄ r̄
    witness = [wp_bar]
    for t in y_names + poset.threads + x_names:
        witness += out.thread_events[t]
    witness += [w_bar, r_bar]
    assert realizes(out, witness), "reverse-instance witness does not realize the instance"
    return ReverseInstance(out, witness, pairs)


# -- race instance --------------------------------------------------------------


def build_race_instance(inst: ReverseInstance | tuple) -> tuple[Trace, tuple[int, int]]:
    """Trace whose (w(y), r(y)) pair is a predictable race iff the triplet can be reversed.

    Events are laid out along the witness.  Each dominant pair (e1, e2) gets a
    write on a fresh variable right after e1 and its read right before e2.
    Every thread other than the two holding the distinguished triplet ends
    with a write that the thread of r̄ reads at its end, just before r(y).
    The thread of w̄' runs entirely inside one critical section on lock l,
    which also encloses its final w(y); w̄ gets a second section on l.
    """
    if isinstance(inst, ReverseInstance):
        poset, witness = inst.poset, inst.witness
    else:
        poset, witness = inst
    if poset.distinguished is None:
        raise ValueError("instance needs a distinguished triplet")
    if not realizes(poset, witness):
        raise ValueError("witness does not realize the instance")
    w_bar, r_bar, wp_bar = poset.distinguished
    t_w, t_wp = poset.by_id[w_bar].thread, poset.by_id[wp_bar].thread
    if poset.by_id[r_bar].thread != t_w:
        raise ValueError("w̄ and r̄ must share a thread")
    pairs = sorted(dominant_pairs(poset))
    used_vars = {e.var for e in poset.events}

    def fresh(base):
        name = base
        while name in used_vars:
            name += "'"
        used_vars.add(name)
        return name

    pair_var = {p: fresh(f"x[{p[0]},{p[1]}]") for p in pairs}
    others = [t for t in poset.threads if t not in (t_w, t_wp)]
    fin_var = {t: fresh(f"x^{t}") for t in others}
    y = fresh("y")
    lock = "l"
    first_of = {t: evs[0] for t, evs in poset.thread_events.items()}
    last_of = {t: evs[-1] for t, evs in poset.thread_events.items()}
    recs: list[tuple] = []
    target = [0, 0]
    for e in witness:
        ev = poset.by_id[e]
        t = ev.thread
        if t == t_wp and e == first_of[t]:
            recs.append((t, "acq", lock))
        if e == w_bar:
            recs.append((t, "acq", lock))
        for p in pairs:
            if p[1] == e:
                recs.append((t, "r", pair_var[p]))
        recs.append((t, ev.op, ev.var))
        if e == w_bar:
            recs.append((t, "rel", lock))
        for p in pairs:
            if p[0] == e:
                recs.append((t, "w", pair_var[p]))
        if e == last_of[t]:
            if t in fin_var:
                recs.append((t, "w", fin_var[t]))
            if t == t_wp:
                recs.append((t, "w", y))
                target[0] = len(recs)
                recs.append((t, "rel", lock))
    for t in others:
        recs.append((t_w, "r", fin_var[t]))
    recs.append((t_w, "r", y))
    target[1] = len(recs)
    trace = Trace.from_records(recs)
    from .trace_model import check_valid

    check_valid(trace)
    return trace, (target[0], target[1])


# -- random instances ----------------------------------------------------------


def gen_rfposet(seed: int, n_events: int = 8, n_threads: int = 3, n_vars: int = 2,
                p_edge: float = 0.3) -> RfPoset:
    """Random normalized rf-poset.

    Reads observe the latest local write; cross edges follow a random
    interleaving, so the order is acyclic by construction.
    """
    rng = random.Random(seed)
    events, rf = [], {}
    last_local: dict[tuple[int, int], int] = {}
    for i in range(1, n_events + 1):
        t, v = rng.randrange(n_threads), rng.randrange(n_vars)
        if (t, v) in last_local and rng.random() < 0.5:
            events.append(RfEvent(i, f"t{t + 1}", "r", f"x{v}"))
            rf[i] = last_local[t, v]
        else:
            events.append(RfEvent(i, f"t{t + 1}", "w", f"x{v}"))
            last_local[t, v] = i
    order = [(a.id, b.id) for a in events for b in events
             if a.id < b.id and a.thread != b.thread and rng.random() < p_edge]
    return normalize(RfPoset(events, order, rf))


__all__ = [
    "RfEvent", "RfPoset", "NormalizationError", "ReverseInstance", "REALIZE_DEFAULT_CAP",
    "dominant_pairs", "realizability_bf", "realizes", "reverse_realizability_bf", "normalize",
    "is_normalized", "build_reverse_instance", "build_race_instance", "gen_rfposet",
]
