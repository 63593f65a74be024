#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python twins.

Runs the scenario stepping kernel over a large batch and the minimax
design search, on both backends, and prints a timing table plus a
bit-identity check. Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import sys
import time

import numpy as np

import perfbound._kernels_py as kernels_py

try:
    import perfbound._kernels as kernels_c
except ImportError:
    kernels_c = None

from perfbound.sampling import ParameterBox, reference_grid


def _scenario_inputs(n, seed=123):
    rng = np.random.default_rng(seed)
    box = ParameterBox.default()
    pts = rng.uniform(box.lowers, box.uppers, size=(n, 3))
    ve = np.ascontiguousarray(pts[:, 0] / 3.6)
    vt = np.ascontiguousarray(pts[:, 1] / 3.6)
    det = np.ascontiguousarray(np.minimum(150.0, 50.0 * np.radians(pts[:, 2])))
    return ve, vt, det


def _lhc_inputs(n, iters, seed=123):
    rng = np.random.default_rng(seed)
    d = 3
    unit = np.empty((n, d))
    for j in range(d):
        unit[:, j] = (rng.permutation(n) + rng.random(n)) / n
    unit = np.ascontiguousarray(unit)
    dims = rng.integers(0, d, iters)
    idx_i = rng.integers(0, n, iters)
    idx_j = rng.integers(0, n, iters)
    return unit, reference_grid(d), dims, idx_i, idx_j


def _time(fn):
    t0 = time.perf_counter()
    result = fn()
    return time.perf_counter() - t0, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    n_sim = 2_000 if args.quick else 10_000
    n_lhc, iters = (60, 2_000) if args.quick else (100, 10_000)

    if kernels_c is None:
        print("compiled extension not built; showing pure-Python timings only")

    print(f"\nscenario stepping kernel ({n_sim} episodes, dt=0.01, gap 100 m)")
    ve, vt, det = _scenario_inputs(n_sim)
    sim_args = (ve, vt, det, 6.0, 0.5, 100.0, 0.01, 60.0)
    t_py, res_py = _time(lambda: kernels_py.simulate_batch(*sim_args))
    print(f"  python   {t_py:8.3f} s  ({n_sim / t_py:9.0f} episodes/s)")
    if kernels_c is not None:
        t_c, res_c = _time(lambda: kernels_c.simulate_batch(*sim_args))
        print(f"  compiled {t_c:8.3f} s  ({n_sim / t_c:9.0f} episodes/s)")
        print(f"  speedup  {t_py / t_c:8.1f}x")
        identical = all(
            np.array_equal(a, b, equal_nan=True) for a, b in zip(res_c, res_py)
        )
        print(f"  outputs bit-identical: {identical}")

    print(f"\nminimax design search (n={n_lhc}, {iters} swap proposals, 17^3 grid)")
    unit, grid, dims, ii, jj = _lhc_inputs(n_lhc, iters)
    p_py = np.ascontiguousarray(unit.copy())
    t_py, crit_py = _time(lambda: kernels_py.minimax_optimize(p_py, grid, dims, ii, jj))
    print(f"  python   {t_py:8.3f} s  (criterion {crit_py[0]:.4f} -> {crit_py[1]:.4f})")
    if kernels_c is not None:
        p_c = np.ascontiguousarray(unit.copy())
        t_c, crit_c = _time(lambda: kernels_c.minimax_optimize(p_c, grid, dims, ii, jj))
        print(f"  compiled {t_c:8.3f} s  (criterion {crit_c[0]:.4f} -> {crit_c[1]:.4f})")
        print(f"  speedup  {t_py / t_c:8.1f}x")
        print(f"  outputs bit-identical: {np.array_equal(p_c, p_py) and crit_c == crit_py}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
