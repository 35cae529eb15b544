"""Drop accesses to variables whose conflicting accesses are already ordered.

e1 counts as ordered before e2 when every reordering that enables e2 must
contain e1: e1 lies in the closure of e2's thread-order predecessors under
thread order (with fork/join) and last-write edges.  A variable all of whose
conflicting pairs are ordered that way cannot race, and removing its
accesses leaves the closures of all other events unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trace_model import Kind, Trace

# above this many events the compiled scan is used when numba is available
COMPILED_THRESHOLD = 50_000


@dataclass
class FilterResult:
    trace: Trace
    dropped_vars: list[str] = field(default_factory=list)
    dropped_counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_dropped(self) -> int:
        return sum(self.dropped_counts.values())


def _racy_vars_py(trace: Trace) -> np.ndarray:
    T, V = trace.T, trace.V
    clock = [[0] * T for _ in range(T)]
    lw = [[0] * T for _ in range(V)]
    last_r = [[0] * T for _ in range(V)]  # latest position of a read of x by thread u
    last_w = [[0] * T for _ in range(V)]
    racy = np.zeros(V, dtype=bool)
    th, kd, tg = trace.thread_of, trace.kind_of, trace.target_of
    for e in range(1, len(trace) + 1):
        t, k, x = th[e], kd[e], tg[e]
        c = clock[t]
        if k <= Kind.WRITE:
            if not racy[x]:
                lwx, lrx = last_w[x], last_r[x]
                for u in range(T):
                    if u != t and (lwx[u] > c[u] or (k == Kind.WRITE and lrx[u] > c[u])):
                        racy[x] = True
                        break
            c[t] += 1
            if k == Kind.READ:
                src = lw[x]
                for i in range(T):
                    if src[i] > c[i]:
                        c[i] = src[i]
                last_r[x][t] = c[t]
            else:
                lw[x] = list(c)
                last_w[x][t] = c[t]
            continue
        c[t] += 1
        if k == Kind.FORK:
            child = clock[x]
            for i in range(T):
                if c[i] > child[i]:
                    child[i] = c[i]
        elif k == Kind.JOIN:
            child = clock[x]
            for i in range(T):
                if child[i] > c[i]:
                    c[i] = child[i]
    return racy


def racy_vars(trace: Trace) -> np.ndarray:
    """Boolean mask over variables: does some conflicting pair escape the ordering?"""
    if len(trace) >= COMPILED_THRESHOLD:
        try:
            from . import _kernel
        except ImportError:  # pragma: no cover - numba missing
            pass
        else:
            return _kernel.racy_vars_compiled(trace)
    return _racy_vars_py(trace)


def filter_ordered_variables(trace: Trace) -> FilterResult:
    """Remove every access to a variable that cannot take part in a race."""
    if trace.V == 0:
        return FilterResult(trace)
    racy = racy_vars(trace)
    acc = trace.kinds <= Kind.WRITE
    var_of = np.where(acc, trace.targets, 0)
    drop = acc & ~racy[var_of]
    if not drop.any():
        return FilterResult(trace)
    keep = ~drop
    counts = np.bincount(trace.targets[drop], minlength=trace.V)
    dropped = [trace.var_names[v] for v in range(trace.V) if not racy[v] and counts[v]]
    # renumber surviving variables densely, keeping their names
    survivors = np.flatnonzero(racy)
    remap = np.full(trace.V, -1, dtype=np.int32)
    remap[survivors] = np.arange(len(survivors), dtype=np.int32)
    targets = trace.targets.copy()
    targets[acc] = remap[trace.targets[acc]]
    origin = np.arange(1, len(trace) + 1) if trace.origin is None else trace.origin
    out = Trace(trace.threads[keep], trace.kinds[keep], targets[keep], trace.locs[keep],
                trace.thread_names, [trace.var_names[v] for v in survivors], trace.lock_names,
                origin=origin[keep])
    return FilterResult(out, dropped, {trace.var_names[v]: int(counts[v]) for v in range(trace.V)
                                       if not racy[v] and counts[v]})
