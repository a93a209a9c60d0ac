#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Two workload profiles, matching how the package actually spends time:

* ``fine``  — one large table (a finely discretized pair of continuous
  factors), a handful of expensive scans.  This is the interactive path
  for continuous-variable users.
* ``swarm`` — thousands of small tables, as in the randomized soundness
  experiment, where per-call overhead dominates.

Run: ``python benchmarks/bench_kernels.py [--repeat N]``.
Verifies that both backends return identical values before timing them.
"""

import argparse
import time

import numpy as np

from coact.kernels import _pykernels

try:
    from coact.kernels import _ckernels
except ImportError:
    _ckernels = None


def random_table(rng, shape):
    return np.ascontiguousarray(rng.integers(0, 2, size=shape, dtype=np.uint8))


def random_monotone_table(rng, shape):
    table = np.zeros(shape, dtype=np.uint8)
    n_a, n_b = shape[0], shape[1]
    for k in range(shape[2]):
        for l in range(shape[3]):
            thresholds = np.sort(rng.integers(0, n_b + 1, size=n_a))[::-1]
            for i in range(n_a):
                table[i, thresholds[i] :, k, l] = 1
    return table


def workloads(rng):
    fine = random_table(rng, (160, 160, 3, 2))
    fine_mono = random_monotone_table(rng, (160, 160, 3, 2))
    swarm = [random_table(rng, (4, 4, 2, 3)) for _ in range(4000)]
    return [
        ("fine/interference", lambda m: m.first_interference_witness(fine, 0)),
        ("fine/monotone", lambda m: m.monotone_flags(fine_mono, 0)),
        ("fine/consistency", lambda m: m.first_consistency_violation(fine_mono, 0)),
        ("fine/insensitivity", lambda m: m.first_insensitivity_violation(fine, 0, 80)),
        (
            "swarm/interference x4000",
            lambda m: [m.first_interference_witness(t, 0) for t in swarm],
        ),
        (
            "swarm/monotone x4000",
            lambda m: [m.monotone_flags(t, 1) for t in swarm],
        ),
    ]


def check_agreement(rng, n=300):
    for _ in range(n):
        shape = tuple(rng.integers(2, 7, size=4))
        t = random_table(rng, shape)
        for actor in (0, 1):
            assert _pykernels.first_interference_witness(
                t, actor
            ) == _ckernels.first_interference_witness(t, actor)
            assert _pykernels.monotone_flags(t, actor) == _ckernels.monotone_flags(
                t, actor
            )
            assert _pykernels.first_consistency_violation(
                t, actor
            ) == _ckernels.first_consistency_violation(t, actor)
            start = int(rng.integers(0, shape[actor]))
            assert _pykernels.first_insensitivity_violation(
                t, actor, start
            ) == _ckernels.first_insensitivity_violation(t, actor, start)


def bench(fn, module, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(module)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(20240101)
    if _ckernels is None:
        print("compiled backend not available; timing the NumPy fallback only")
    else:
        check_agreement(np.random.default_rng(7))
        print("backend agreement check passed (300 random tables)")

    print(f"{'workload':<28}{'numpy':>12}{'cython':>12}{'speedup':>10}")
    for name, fn in workloads(rng):
        t_py = bench(fn, _pykernels, args.repeat)
        if _ckernels is None:
            print(f"{name:<28}{t_py * 1e3:>10.2f}ms{'-':>12}{'-':>10}")
        else:
            t_cy = bench(fn, _ckernels, args.repeat)
            print(
                f"{name:<28}{t_py * 1e3:>10.2f}ms{t_cy * 1e3:>10.2f}ms"
                f"{t_py / t_cy:>9.1f}x"
            )


if __name__ == "__main__":
    main()
