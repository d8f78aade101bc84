#!/usr/bin/env python3
"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

The hot path of every divergence/entropy evaluation is a handful of weighted
power sums over short atom vectors, so per-call overhead dominates.  This
script times each kernel on both backends at typical alphabet sizes and then
times full divergence evaluations end to end.

Run:  python3 benchmarks/bench_kernels.py [--repeats 20000]
The active backend for the end-to-end section follows GABDIV_BACKEND.
"""

import argparse
import time

import numpy as np

from gabdiv import Hyper, Measure, parse_spec, gab
from gabdiv import _kernels as K


def time_call(fn, args, repeats):
    fn(*args)  # warm-up (and jit compile)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    sizes = (8, 50, 10_000)
    cases = [
        ("power_sum", lambda p, q, mu: (p, mu, 1.3)),
        ("inner_sum", lambda p, q, mu: (p, q, mu, 0.7, 0.6)),
        ("kl_sum", lambda p, q, mu: (p, q, mu)),
        ("sq_log_diff_sum", lambda p, q, mu: (p, q, mu)),
    ]
    backends = [name for name, impl in K.BACKENDS.items() if impl is not None]
    print(f"{'kernel':18s} {'n':>6s} " + " ".join(f"{b:>12s}" for b in backends)
          + "   speedup")
    for name, make_args in cases:
        for n in sizes:
            reps = max(1, repeats // max(1, n // 50))
            p = rng.uniform(0.01, 1.0, n)
            q = rng.uniform(0.01, 1.0, n)
            mu = rng.uniform(0.5, 2.0, n)
            args = make_args(p, q, mu)
            times = [time_call(K.BACKENDS[b][name], args, reps) for b in backends]
            ratio = times[0] / times[-1] if len(times) > 1 else float("nan")
            cols = " ".join(f"{t * 1e6:10.2f}us" for t in times)
            print(f"{name:18s} {n:6d} {cols}   {ratio:6.2f}x")


def bench_divergence(repeats):
    rng = np.random.default_rng(1)
    f = parse_spec("log")
    h = Hyper.of(0.7, 0.9)
    n = 50
    P = Measure(rng.dirichlet(np.ones(n)) * 0.9)
    Q = Measure(rng.dirichlet(np.ones(n)) * 0.9)
    t = time_call(lambda: gab(P, Q, h, f), (), repeats)
    print(f"\nend-to-end gab (n={n}, psi=log, backend={K.ACTIVE_BACKEND}): "
          f"{t * 1e6:.2f}us per call")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20_000)
    args = parser.parse_args()
    print(f"backends available: "
          f"{[n for n, impl in K.BACKENDS.items() if impl is not None]} "
          f"(active: {K.ACTIVE_BACKEND})\n")
    bench_kernels(args.repeats)
    bench_divergence(args.repeats)


if __name__ == "__main__":
    main()
