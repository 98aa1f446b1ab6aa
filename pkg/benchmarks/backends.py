"""Timing comparison of the compiled and pure coupling kernels.

Runs the same fixed-seed workload through both backends, checks the outputs
are bit-identical, and prints per-sample times with the speedup.  Usage:

    python3 benchmarks/backends.py [--samples 400] [--sizes 64,256,1024,4096]
"""

import argparse
import time

import numpy as np

from bridge_kmt import CouplerConfig, backend_name, sample_deltas
from bridge_kmt.jump_dist import make_builtin


def _run(dist, n, samples, engine, seed):
    cfg = CouplerConfig(engine=engine)
    t0 = time.perf_counter()
    res = sample_deltas(dist, n, dist.mean() * n, samples, cfg, seed=seed)
    return time.perf_counter() - t0, res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=400)
    ap.add_argument("--sizes", default="64,256,1024,4096")
    ap.add_argument("--dist", default="bernoulli,p=0.5")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    from bridge_kmt.cli import parse_dist
    dist = parse_dist(args.dist)
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"default backend here: {backend_name()}")
    print(f"{'n':>6} {'compiled':>12} {'pure':>12} {'speedup':>8}  identical")
    for n in sizes:
        tc, rc = _run(dist, n, args.samples, "compiled", args.seed)
        tp, rp = _run(dist, n, args.samples, "pure", args.seed)
        same = all(np.array_equal(rc[k], rp[k]) for k in ("delta", "midpoint_w",
                                                          "xi_count"))
        print(f"{n:>6} {tc / args.samples * 1e3:>10.3f}ms "
              f"{tp / args.samples * 1e3:>10.3f}ms {tp / tc:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
