#!/usr/bin/env python3
"""Compare the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the four hot paths (stationary artificial-time iteration, forward
density stepping, circular transport distance, finite-horizon sweeps) on the
reference configuration and prints one row per kernel and backend.
"""

import argparse
import math
import time

import numpy as np

from circadian_mfg._kernels import pure
from circadian_mfg.grid import ModelParams, make_grid
from circadian_mfg.operators import (
    Scheme,
    cfl_dt,
    interaction_kernel,
    sun_cost,
    transport_coefficients,
)

try:
    from circadian_mfg._kernels import _core as compiled
except ImportError:
    compiled = None

GRID = make_grid(120)
PARAMS = ModelParams(p=0.0)
KERNEL = np.ascontiguousarray(interaction_kernel(GRID))
CSUN = np.ascontiguousarray(sun_cost(GRID, 0.0))
DT = cfl_dt(GRID, PARAMS, 0.25)


def bench_method2(impl, iters):
    M = np.full(GRID.n, 1 / (2 * math.pi))
    U = np.zeros(GRID.n)
    beta = np.zeros(GRID.n)
    t0 = time.perf_counter()
    impl.method2_run(
        M, U, beta, KERNEL, CSUN, PARAMS.drift, PARAMS.sigma, GRID.dphi, DT,
        PARAMS.K, PARAMS.F, 1e-12, iters, 0.25, True,
    )
    return iters / (time.perf_counter() - t0)


def bench_fp_run(impl, steps):
    rng = np.random.default_rng(0)
    beta = rng.normal(scale=0.1, size=GRID.n)
    sub, diag, sup = transport_coefficients(GRID, PARAMS, beta, Scheme.MONOTONE)
    m0 = np.full(GRID.n, 1 / (2 * math.pi))
    t0 = time.perf_counter()
    impl.fp_run(m0, np.ascontiguousarray(sub), np.ascontiguousarray(diag),
                np.ascontiguousarray(sup), DT, steps, steps)
    return steps / (time.perf_counter() - t0)


def bench_w2(impl, evals):
    rng = np.random.default_rng(1)
    wa = rng.uniform(0.01, 1.0, GRID.n)
    wb = rng.uniform(0.01, 1.0, GRID.n)
    wa /= wa.sum()
    wb /= wb.sum()
    t0 = time.perf_counter()
    for _ in range(evals):
        impl.circular_w2_sq(wa, wb, GRID.dphi)
    return evals / (time.perf_counter() - t0)


def bench_mfg_sweeps(impl, slices):
    rng = np.random.default_rng(2)
    M_prev = np.tile(np.full(GRID.n, 1 / (2 * math.pi)), (slices + 1, 1))
    beta_prev = rng.normal(scale=0.05, size=(slices + 1, GRID.n))
    cbar = np.ascontiguousarray(M_prev @ KERNEL.T)
    U = np.empty_like(M_prev)
    beta_new = np.empty_like(M_prev)
    M_new = np.empty_like(M_prev)
    t0 = time.perf_counter()
    impl.mfg_backward(U, beta_new, cbar, np.ascontiguousarray(beta_prev), CSUN,
                      PARAMS.drift, PARAMS.sigma, GRID.dphi, 0.02, PARAMS.K, PARAMS.F, True)
    impl.mfg_forward(M_new, beta_new, np.ascontiguousarray(M_prev[0]),
                     PARAMS.drift, PARAMS.sigma, GRID.dphi, 0.02, True)
    return 2 * slices / (time.perf_counter() - t0)


BENCHES = [
    ("method2 iterations/s", bench_method2, {"compiled": 200_000, "pure": 5_000}),
    ("density steps/s", bench_fp_run, {"compiled": 500_000, "pure": 20_000}),
    ("circular W2 evals/s", bench_w2, {"compiled": 2_000, "pure": 50}),
    ("game sweep slices/s", bench_mfg_sweeps, {"compiled": 20_000, "pure": 2_000}),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = [("pure", pure)] + ([("compiled", compiled)] if compiled else [])
    if compiled is None:
        print("note: compiled kernels unavailable, timing the fallback only")
    print(f"{'kernel':28s} " + " ".join(f"{name:>14s}" for name, _ in backends) + "  speedup")
    for label, fn, sizes in BENCHES:
        rates = {}
        for name, impl in backends:
            best = 0.0
            for _ in range(args.repeats):
                best = max(best, fn(impl, sizes[name]))
            rates[name] = best
        row = f"{label:28s} " + " ".join(f"{rates[name]:14.3g}" for name, _ in backends)
        if "compiled" in rates:
            row += f"  {rates['compiled'] / rates['pure']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
