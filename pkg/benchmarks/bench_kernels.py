#!/usr/bin/env python3
"""Time the compiled stream kernel against the pure-Python fallback.

Workload: the FDR-control sweep's hottest cell (pi1 = 0.5, T = 1000), where
the per-step threshold sum runs over hundreds of past rejections. Usage:

    python benchmarks/bench_kernels.py [--trials 100] [--t 1000]
"""

import argparse
import time

import numpy as np

from onlinefdr._kernels import _pure
from onlinefdr.policies import GammaSequence
from onlinefdr.sim import GaussianScenario, generate_stream

try:
    from onlinefdr._kernels import _core
except ImportError:
    _core = None


def bench(impl, streams, gamma_tab, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        n_steps = 0
        for p, is_null in streams:
            T = p.size
            impl.run_lord_family(
                p, is_null.astype(np.int8), np.ones(T), np.ones(T), gamma_tab,
                0.05, 0.025, 1.0, 0, 1,
            )
            n_steps += T
        best = min(best, time.perf_counter() - t0)
    return best, n_steps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--t", type=int, default=1000)
    args = ap.parse_args()

    streams = [
        generate_stream(GaussianScenario.constant(args.t, 0.5, seed=k))
        for k in range(args.trials)
    ]
    gamma_tab = GammaSequence.lord_default().table(args.t)

    rows = []
    pure_s, n = bench(_pure, streams, gamma_tab)
    rows.append(("pure", pure_s, n / pure_s))
    if _core is not None:
        core_s, n = bench(_core, streams, gamma_tab)
        rows.append(("compiled", core_s, n / core_s))

    print(f"workload: {args.trials} streams x T={args.t}, pi1=0.5, LORD-family")
    print(f"{'backend':<10} {'seconds':>9} {'steps/sec':>12}")
    for name, secs, rate in rows:
        print(f"{name:<10} {secs:>9.3f} {rate:>12.0f}")
    if _core is not None:
        print(f"speedup: {pure_s / core_s:.1f}x")
    else:
        print("compiled kernel not built; install with `pip install -e .`")


if __name__ == "__main__":
    main()
