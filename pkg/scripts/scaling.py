"""Wall time and peak traced memory of the compiled detector across trace sizes."""
import argparse
import gc
import time
import tracemalloc

from syncp import syncp_engine
from syncp.generators import GenConfig, gen_random


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="100000,1000000,10000000")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--locks", type=int, default=4)
    ap.add_argument("--vars", type=int, default=8)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    def cfg(n):
        return GenConfig(n_events=n, n_threads=args.threads, n_locks=args.locks,
                         n_vars=args.vars, seed=args.seed)

    syncp_engine.run(gen_random(cfg(2000)), engine="compiled")
    print(f"{'events':>10} {'seconds':>8} {'us/event':>9} {'peak MiB':>9} {'races':>7}")
    for n in map(int, args.sizes.split(",")):
        trace = gen_random(cfg(n))
        gc.collect()
        tracemalloc.start()
        t0 = time.perf_counter()
        res = syncp_engine.run(trace, engine="compiled", validate=False)
        dt = time.perf_counter() - t0
        peak = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()
        print(f"{n:>10} {dt:>8.2f} {dt / n * 1e6:>9.2f} {peak / 2**20:>9.1f} {len(res.reports):>7}")
        del trace, res


if __name__ == "__main__":
    main()
