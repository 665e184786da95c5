#!/usr/bin/env python3
"""Time the compiled ranking kernels against the pure numpy fallback.

Function-level rows call both implementations directly; the chain row
re-launches this script under each MALLOWS_DPM_KERNELS value so the whole
sampler stack binds the backend the way a user process would.

    python3 benchmarks/bench_kernels.py
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from mallows_dpm._kernels import _pure

try:
    from mallows_dpm._kernels import _core
except ImportError:
    _core = None


def _inputs(n: int, t: int, centers: int, rng: np.random.Generator):
    items = rng.permutation(n)[:t].astype(np.int64)
    order = rng.permutation(n).astype(np.int64)
    rank = np.argsort(order).astype(np.int64)
    ranks = np.stack([np.argsort(rng.permutation(n)).astype(np.int64)
                      for _ in range(centers)])
    code = _pure.s_code(items, rank)
    return items, order, rank, ranks, code


def _time(fn, *args) -> float:
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=3, number=number)) / number


def bench_functions() -> None:
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'size':<16} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for n, t, centers in ((20, 10, 20), (100, 50, 50)):
        items, order, rank, ranks, code = _inputs(n, t, centers, rng)
        rows = (
            ("s_code", f"n={n} t={t}", (items, rank)),
            ("s_codes", f"{centers} centers", (items, ranks)),
            ("build_from_code", f"n={n} t={t}", (code, order)),
        )
        for name, size, args in rows:
            pure_s = _time(getattr(_pure, name), *args)
            if _core is None:
                print(f"{name:<18} {size:<16} {pure_s * 1e6:>8.1f}us {'n/a':>10} {'':>8}")
                continue
            core_s = _time(getattr(_core, name), *args)
            print(f"{name:<18} {size:<16} {pure_s * 1e6:>8.1f}us "
                  f"{core_s * 1e6:>8.1f}us {pure_s / core_s:>7.1f}x")


def sweep_seconds() -> float:
    """Per-sweep cost of the beta chain on a small planted problem."""
    from mallows_dpm.dpm import ChainConfig, run_chain
    from mallows_dpm.evaluate import PlantedMixtureSpec, gen_planted_mixture

    spec = PlantedMixtureSpec(K=3, n=20, t=10, theta_star=1.0, points_per_cluster=100)
    data, _, _ = gen_planted_mixture(spec, np.random.default_rng(1))
    cfg = ChainConfig("beta", T=10, K_init=10, seed=1, burn_in=0, stride=1)
    run_chain(data[:50], ChainConfig("beta", T=2, K_init=5, seed=1))  # warm caches
    start = time.perf_counter()
    run_chain(data, cfg)
    return (time.perf_counter() - start) / cfg.T


def bench_sweep() -> None:
    print(f"\n{'beta chain sweep':<18} {'300 points':<16}", end=" ")
    cols = []
    for backend in ("py", "c"):
        if backend == "c" and _core is None:
            cols.append(f"{'n/a':>10}")
            continue
        env = dict(os.environ, MALLOWS_DPM_KERNELS=backend)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--sweep-child"],
            capture_output=True, text=True, env=env, check=True,
        )
        cols.append(f"{float(out.stdout) * 1e3:>8.1f}ms")
    print(" ".join(cols))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sweep-child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.sweep_child:
        print(sweep_seconds())
        return
    if _core is None:
        print("compiled backend not built; showing pure numpy only\n")
    bench_functions()
    bench_sweep()


if __name__ == "__main__":
    main()
