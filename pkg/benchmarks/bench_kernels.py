"""Timing of the accelerated kernels against the plain numpy path.

Evaluates a representative mixed functional (weighted cubic with a
derivative factor) and its gradient on a ladder of grid sizes and
prints the per-call times plus the speedup.  Run from the repo root:

    python3 benchmarks/bench_kernels.py --repeats 20
"""

import argparse
import time

import numpy as np

from hamalg import LatticeConfig, default_binding, discretize, parse_symbol
from hamalg._kernels import active_path
from hamalg.lattice import random_profile

EXPR = ("int[x]( (1/2)*pi(x)^2 + (1/2)*D(phi,1)(x)^2"
        " + f(x)*phi(x)^3 + g(x)*phi(x)*D(phi,2)(x)*pi(x) )")


def clock(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--sizes", type=int, nargs="+",
                    default=[256, 1024, 4096, 16384])
    args = ap.parse_args()

    if active_path() != "numba":
        print("accelerated path unavailable (HAMALG_NO_NUMBA?); nothing to compare")
        return

    sym = parse_symbol(EXPR)
    bind = default_binding()
    rng = np.random.default_rng(0)
    print(f"functional: {EXPR}")
    print(f"{'N':>7} {'what':>8} {'numba':>12} {'numpy':>12} {'speedup':>8}")
    for n in args.sizes:
        cfg = LatticeConfig(n=n, length=8.0)
        fn = discretize(sym, cfg, bind)
        st = random_profile(rng).realize(cfg)
        fn(st, path="numba")  # compile outside the timed region
        fn.gradient(st, path="numba")
        for what, call in (
            ("value", lambda p: fn(st, path=p)),
            ("gradient", lambda p: fn.gradient(st, path=p)),
        ):
            tb = clock(lambda: call("numba"), args.repeats)
            tn = clock(lambda: call("numpy"), args.repeats)
            print(f"{n:>7} {what:>8} {tb * 1e6:>10.1f}us {tn * 1e6:>10.1f}us "
                  f"{tn / tb:>7.1f}x")


if __name__ == "__main__":
    main()
