"""Equality-language traces in both layouts: does SyncP find a race exactly when u != v?

For each layout prints how many (u, v) pairs satisfy race-iff-differ, and for
u != v how often the first mismatching pair is a predictable race and a
sync-preserving race according to the search oracles.
"""
import argparse
import itertools
import random
import time

from syncp import oracle_bf, syncp_engine
from syncp.generators import equality_access, gen_equality


def cases(n, samples, seed):
    if samples == 0:
        bits = ["".join(p) for p in itertools.product("01", repeat=n)]
        return list(itertools.product(bits, repeat=2))
    rng = random.Random(seed)
    draw = lambda: "".join(rng.choice("01") for _ in range(n))  # noqa: E731
    return [(draw(), draw()) for _ in range(samples)]


def sweep(pairs, layout):
    c = dict(pairs=0, iff=0, differ=0, predictable=0, sync_preserving=0)
    for u, v in pairs:
        t = gen_equality(u, v, layout)
        c["pairs"] += 1
        c["iff"] += bool(syncp_engine.run(t).reports) == (u != v)
        if u == v:
            continue
        c["differ"] += 1
        i = next(i for i in range(len(u)) if u[i] != v[i])
        pair = equality_access(t, 0, i), equality_access(t, 1, i)
        c["predictable"] += oracle_bf.is_predictable_race_bf(t, *pair, max_events=10**4)
        c["sync_preserving"] += oracle_bf.is_syncp_race_bf(t, *pair, max_events=10**4)
    return c


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--samples", type=int, default=200,
                    help="random pairs for n > 4; 0 enumerates all of them")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for layout in ("serial", "interleaved"):
        for n in args.n:
            t0 = time.perf_counter()
            c = sweep(cases(n, 0 if n <= 4 else args.samples, args.seed), layout)
            print(f"{layout:>11} n={n}: " + " ".join(f"{k}={v}" for k, v in c.items())
                  + f" ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
