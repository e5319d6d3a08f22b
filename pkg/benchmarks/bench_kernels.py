"""Time the jit and vectorized simulation backends on the builtin networks.

Usage: python benchmarks/bench_kernels.py [--slots N] [--repeat K]

Each (scenario, policy) pair runs on both backends with identical seeds;
jit compilation is amortized by a short warmup run and not counted.
With DAGCAST_NO_NUMBA=1 (or numba missing) only the numpy column runs.
"""

import argparse
import time
from fractions import Fraction as F

from dagcast import (
    PistarPolicy,
    TreePolicy,
    build_activation_set,
    builtin,
    compute_capacity,
    pirand_build,
    resolve_trees,
    run,
)
from dagcast.kernels import HAVE_NUMBA

CASES = [
    # scenario, policy, lam, tree spec
    ("k4_unit", "pistar", F(2, 5), None),
    ("k4_unit", "pirand", F(2, 5), None),
    ("fig5", "pistar", F(9, 10), None),
    ("fig5", "pitree", F(7, 10), "auto"),
    ("dag10", "pistar", F(3, 1), None),
    ("dag10", "pitree", F(3, 2), "auto:2"),
]


def make_policy(sc, S, policy, lam, trees):
    if policy == "pistar":
        return PistarPolicy(sc.net, S)
    if policy == "pitree":
        return TreePolicy(sc.net, S, resolve_trees(sc.net, S, sc.trees, trees))
    report = compute_capacity(sc.net, S)
    return pirand_build(sc.net, S, report, lam, F(1, 20))


def bench(net, S, pol, lam, slots, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        run(net, S, pol, lam, slots, seed=1, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if HAVE_NUMBA:
        # trigger jit compilation of all three loops outside the timed region
        t0 = time.perf_counter()
        for name, policy, lam, trees in CASES[:1] + CASES[1:2] + CASES[3:4]:
            sc = builtin(name)
            S = build_activation_set(sc.net, sc.model)
            run(sc.net, S, make_policy(sc, S, policy, lam, trees), lam, 10,
                seed=1, backend="numba")
        print(f"numba warmup (jit compile): {time.perf_counter() - t0:.1f}s")
    else:
        print("numba unavailable; timing numpy backend only")

    header = f"{'scenario':<9} {'policy':<7} {'slots':>7}"
    for b in backends:
        header += f" {b + ' (s)':>11}"
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for name, policy, lam, trees in CASES:
        sc = builtin(name)
        S = build_activation_set(sc.net, sc.model)
        pol = make_policy(sc, S, policy, lam, trees)
        times = {
            b: bench(sc.net, S, pol, lam, args.slots, b, args.repeat)
            for b in backends
        }
        row = f"{name:<9} {policy:<7} {args.slots:>7}"
        for b in backends:
            row += f" {times[b]:>11.3f}"
        if len(backends) == 2:
            row += f" {times['numpy'] / times['numba']:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
