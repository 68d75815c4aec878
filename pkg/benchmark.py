#!/usr/bin/env python3
"""
Benchmark for the Splash Simulator
==================================

Timings of the solver components at several resolutions.
"""

import time
import statistics
from typing import Dict, List, Tuple

import numpy as np
from scipy.sparse.linalg import splu

from elliptic import FACTOR_CACHE, disk_domain
from fixedpoint import picard_run
from initdata import build_stream, enforce_compatibility
from stokes_linear import LinearData, TimeGrid, stationary_solve, system_matrix

RESOLUTIONS: List[Tuple[int, int]] = [(8, 32), (12, 48), (16, 64), (24, 96)]


def _timed(fn, repeats: int = 3) -> float:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def benchmark_resolution(radial: int, angular: int, picard: bool = True) -> Dict[str, float]:
    """Median wall times in seconds for one grid."""
    FACTOR_CACHE.clear()
    dom = disk_domain(radial=radial, angular=angular)
    rhs = dom.Q2 * np.cos(dom.nodes.real)
    bc = np.zeros(len(dom.boundary_index))
    results = {"nodes": dom.size}

    start = time.perf_counter()
    dom.solve_weighted_poisson(rhs, bc)
    results["poisson_first"] = time.perf_counter() - start
    results["poisson_cached"] = _timed(lambda: dom.solve_weighted_poisson(rhs, bc))

    sigma = 100.0
    matrix = system_matrix(dom, sigma).tocsc()
    results["stokes_factor"] = _timed(lambda: splu(matrix), repeats=1)
    grid = TimeGrid.from_steps(0.01, 1)
    zero = LinearData.zeros(dom, grid)
    v_prev = np.stack([np.sin(dom.nodes.imag), np.cos(dom.nodes.real)])
    stationary_solve(dom, sigma, zero.f[1], zero.g[1], zero.h[1], v_prev)
    results["stokes_step"] = _timed(lambda: stationary_solve(dom, sigma, zero.f[1], zero.g[1], zero.h[1], v_prev))

    if picard:
        iv = build_stream(dom, lambda p: 0.05 * np.cos(2 * np.angle(p - dom.center)))
        v0 = enforce_compatibility(dom, iv.v0)
        grid = TimeGrid.from_steps(0.01, 4)
        start = time.perf_counter()
        result = picard_run(dom, grid, v0)
        elapsed = time.perf_counter() - start
        results["picard_iteration"] = elapsed / max(len(result.history), 1)
        results["picard_iterations"] = len(result.history)
    return results


def resolution_profile(picard: bool = True):
    print("SOLVER PROFILE PER RESOLUTION")
    print("=" * 84)
    print(f"{'Grid':<10} {'Nodes':<8} {'Poisson':<10} {'Cached':<10} {'Factor':<10} {'Step':<10} "
          f"{'Picard/it':<11} {'Its':<5}")
    print("-" * 84)
    for radial, angular in RESOLUTIONS:
        r = benchmark_resolution(radial, angular, picard)
        print(f"{f'{radial}x{angular}':<10} "
              f"{r['nodes']:<8} "
              f"{r['poisson_first']:<10.4f} "
              f"{r['poisson_cached']:<10.4f} "
              f"{r['stokes_factor']:<10.4f} "
              f"{r['stokes_step']:<10.4f} "
              f"{r.get('picard_iteration', float('nan')):<11.4f} "
              f"{r.get('picard_iterations', 0):<5}")


if __name__ == "__main__":
    print("SPLASH SIMULATOR - BENCHMARK SUITE")
    print("=" * 84)

    resolution_profile()

    print("\nBenchmark complete!")
