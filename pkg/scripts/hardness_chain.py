"""Realizability of random rf-posets against the reverse instance and the race instance.

Counts disagreements among the three brute-force answers, per gadget layout.
"""
import argparse
import time

from syncp.oracle_bf import is_predictable_race_bf
from syncp.rfposet import (build_race_instance, build_reverse_instance, gen_rfposet,
                           realizability_bf, reverse_realizability_bf)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--events", type=int, default=8)
    ap.add_argument("--threads", type=int, default=3)
    ap.add_argument("--layouts", default="split,chained")
    args = ap.parse_args()
    for layout in args.layouts.split(","):
        t0 = time.perf_counter()
        agree = realizable = rev_bad = race_bad = 0
        for seed in range(args.count):
            p = gen_rfposet(seed, n_events=args.events, n_threads=args.threads)
            a = realizability_bf(p) is not None
            inst = build_reverse_instance(p, layout)
            b = reverse_realizability_bf(inst.poset, max_events=60)
            trace, pair = build_race_instance(inst)
            c = is_predictable_race_bf(trace, *pair, max_events=400)
            realizable += a
            rev_bad += a != b
            race_bad += b != c
            agree += a == b == c
        print(f"{layout:>8}: {args.count} posets, {realizable} realizable, "
              f"reverse disagrees {rev_bad}, race disagrees with reverse {race_bad}, "
              f"all agree {agree} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
