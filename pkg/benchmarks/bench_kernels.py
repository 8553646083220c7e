"""Time the compiled and numpy kernel backends side by side.

    python benchmarks/bench_kernels.py [--sizes 100 200 400] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from zsldx.cluster import kernels
from zsldx.cluster.distance import pairwise_euclidean


def swap_inputs(D, k, rng):
    n = D.shape[0]
    med = np.sort(rng.choice(n, size=k, replace=False))
    Dm = D[:, med]
    order = np.argsort(Dm, axis=1, kind="stable")
    near = order[:, 0]
    rows = np.arange(n)
    return med, near, Dm[rows, near], Dm[rows, order[:, 1]]


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    rng = np.random.default_rng(args.seed)
    print(f"backends: {', '.join(backends)} (default {kernels.current_backend()})")
    print(f"{'kernel':<22}{'n':>6}" + "".join(f"{b + ' s':>14}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        D = pairwise_euclidean(rng.normal(size=(n, 8)))
        swap = swap_inputs(D, args.k, rng)
        jobs = {
            "linkage_merges ward": lambda b: kernels.linkage_merges(D, 3, backend=b),
            f"pam_swap_deltas k={args.k}": lambda b: kernels.pam_swap_deltas(D, *swap, backend=b),
        }
        for name, job in jobs.items():
            times = {b: best_of(lambda: job(b), args.repeat) for b in backends}
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            cells = "".join(f"{times[b]:>14.5f}" for b in backends)
            print(f"{name:<22}{n:>6}{cells}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
