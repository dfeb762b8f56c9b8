#!/usr/bin/env python3
"""Compare the compiled Thomas kernel against the pure-Python fallback.

Two views:
  * micro: raw tridiagonal solves across sizes (the kernel itself);
  * end-to-end: a full Newton march on the default configuration with
    each backend selected, verifying bit-identical output.

Run:  python benchmarks/bench_kernels.py [--repeat 200]
"""

import argparse
import time

import numpy as np

from asianfb import MarketParams, _kernels, make_grid, march_newton


def time_thomas(kernel, lower, diag, upper, rhs, floor, repeat):
    best = np.inf
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(repeat):
            kernel.thomas(lower, diag, upper, rhs, floor)
        best = min(best, (time.perf_counter() - start) / repeat)
    return best


def micro(repeat):
    rng = np.random.default_rng(7)
    print(f"{'n':>6} {'pure (us)':>12} {'native (us)':>12} {'speedup':>8}")
    for n in (50, 200, 800, 3200):
        lower = rng.uniform(-1, 1, n - 1)
        upper = rng.uniform(-1, 1, n - 1)
        diag = np.abs(lower.sum()) + rng.uniform(2.5, 4.0, n)
        rhs = rng.uniform(-1, 1, n)
        floor = 1e-14 * np.max(np.abs(diag))
        t_pure = time_thomas(_kernels.pure, lower, diag, upper, rhs, floor, repeat)
        if _kernels.native is None:
            print(f"{n:>6} {t_pure * 1e6:>12.2f} {'n/a':>12} {'n/a':>8}")
            continue
        t_nat = time_thomas(_kernels.native, lower, diag, upper, rhs, floor, repeat)
        print(f"{n:>6} {t_pure * 1e6:>12.2f} {t_nat * 1e6:>12.2f} "
              f"{t_pure / t_nat:>8.1f}")


def end_to_end():
    p = MarketParams(r=0.06, q=0.04, sigma=0.2, T=50.0)
    g = make_grid(p, N=200)
    results = {}
    timings = {}
    names = ["pure"] + (["native"] if _kernels.native is not None else [])
    previous = _kernels.active_name()
    try:
        for name in names:
            _kernels.select(name)
            start = time.perf_counter()
            results[name] = march_newton(p, g)
            timings[name] = time.perf_counter() - start
    finally:
        _kernels.select(previous)

    print(f"\nfull Newton march, N={g.N}, M={g.M}:")
    for name in names:
        print(f"  {name:>6}: {timings[name]:.3f} s")
    if len(names) == 2:
        identical = np.array_equal(results["pure"].rho, results["native"].rho) and \
            np.array_equal(results["pure"].surface, results["native"].surface)
        print(f"  backends bit-identical: {identical}")
        print(f"  march speedup: {timings['pure'] / timings['native']:.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=200,
                        help="solves per timing sample (default 200)")
    args = parser.parse_args()
    print(f"active kernel backend: {_kernels.active_name()}")
    micro(args.repeat)
    end_to_end()


if __name__ == "__main__":
    main()
