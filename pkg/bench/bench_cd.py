"""Benchmark the compiled coordinate-descent kernel against the numpy fallback.

Both implementations run a fixed number of sweeps (tol=0) on identical
problems, so the comparison measures kernel speed, not convergence luck.

    python bench/bench_cd.py [--sizes 120,400,1600] [--lam 1.0]
"""

import argparse
import time

import numpy as np

from kofilter import _cd_py

try:
    from kofilter import _cd_fast
except ImportError:
    _cd_fast = None


def make_problem(d, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((2 * d, d))
    g = np.ascontiguousarray(a.T @ a / (2 * d) + 0.05 * np.eye(d))
    c = rng.standard_normal(d)
    return g, c


def time_kernel(kernel, g, c, lam, sweeps, repeats=5):
    best = float("inf")
    result = None
    for _ in range(repeats):
        b = np.zeros(c.size)
        t0 = time.perf_counter()
        kernel(g, c, lam, 0.0, sweeps, b)
        best = min(best, time.perf_counter() - t0)
        result = b
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="120,400,1600", help="comma-separated dimensions (2p)")
    parser.add_argument("--lam", type=float, default=1.0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'d':>6} {'sweeps':>7} {'compiled':>12} {'pure-python':>12} {'speedup':>8}")
    for d in sizes:
        sweeps = max(5, 40_000 // d)
        g, c = make_problem(d)
        t_py, b_py = time_kernel(_cd_py.cd_gram_sweeps, g, c, args.lam, sweeps)
        if _cd_fast is None:
            print(f"{d:>6} {sweeps:>7} {'n/a':>12} {t_py:>12.4f} {'n/a':>8}")
            continue
        t_fast, b_fast = time_kernel(_cd_fast.cd_gram_sweeps, g, c, args.lam, sweeps)
        assert np.array_equal(b_py, b_fast), "kernels disagree"
        print(f"{d:>6} {sweeps:>7} {t_fast:>12.4f} {t_py:>12.4f} {t_py / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
