"""Compare the compiled and numpy pulse kernels, and grid evaluation across threads.

Usage::

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5] [--threads 1,2,4]

Prints one line per kernel with the best-of-``repeat`` time for each
backend, the speed-up and the largest relative difference between them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from slowdecay import kernels, make_grid, evaluate_on_grid, PulseParams
from slowdecay import _pykernels

CASES = {
    "psi": lambda k, a: k.psi(*a, 0.3),
    "psi_split": lambda k, a: k.psi_split(*a, 0.3),
    "Psi": lambda k, a: k.Psi(*a, 0.3, 1.0),
    "Psi_split": lambda k, a: k.Psi_split(*a, 0.3, 1.0),
    "aux_roots": lambda k, a: k.aux_roots(*a, 0.3, 0.1),
    "u": lambda k, a: k.u(*a, 0.3, 0.1),
    "U": lambda k, a: k.U(*a, 0.3, 0.1, 1.0),
    "f": lambda k, a: k.f(*a, 1.0, 2.0, -0.25),
    "G": lambda k, a: k.G(*a, 1.0, 1.0),
}


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _max_rel(a, b) -> float:
    a, b = (np.asarray(v) for v in (a, b))
    scale = np.maximum(np.abs(a), np.abs(b))
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(a - b) / scale))


def bench_kernels(n: int, repeat: int) -> None:
    rng = np.random.default_rng(0)
    args = (rng.uniform(0.05, 8, n), rng.uniform(-8, 8, n), rng.uniform(-8, 8, n))
    compiled = kernels.backend if kernels.BACKEND != "numpy" else None
    print(f"kernels on {n} points (compiled backend: {kernels.BACKEND if compiled else 'not built'})")
    print(f"{'kernel':<10} {'numpy ms':>10} {'compiled ms':>12} {'speed-up':>9} {'max rel diff':>13}")
    for name, call in CASES.items():
        t_py = best_time(lambda: call(_pykernels, args), repeat)
        if compiled is None:
            print(f"{name:<10} {1e3 * t_py:10.2f} {'-':>12} {'-':>9} {'-':>13}")
            continue
        t_c = best_time(lambda: call(compiled, args), repeat)
        diff = _max_rel(np.asarray(call(_pykernels, args)), np.asarray(call(compiled, args)))
        print(f"{name:<10} {1e3 * t_py:10.2f} {1e3 * t_c:12.2f} {t_py / t_c:9.2f} {diff:13.2e}")


def bench_threads(threads, repeat: int, n_side: int = 600) -> None:
    grid = make_grid({"x": (-8, 8, n_side), "z": (-8, 8, n_side)})
    params = PulseParams()
    print(f"\ngrid evaluation of f on {n_side}x{n_side} cells ({kernels.BACKEND} backend)")
    ref = None
    for t in threads:
        dt = best_time(lambda: evaluate_on_grid("f", params, grid, {"ct": 10.0}, threads=t), repeat)
        out = evaluate_on_grid("f", params, grid, {"ct": 10.0}, threads=t).values
        same = "identical" if ref is None or np.array_equal(out, ref) else "DIFFERENT"
        ref = out if ref is None else ref
        print(f"threads={t:<3d} {1e3 * dt:9.2f} ms  {same}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", default="1,2,4")
    a = ap.parse_args()
    bench_kernels(a.n, a.repeat)
    bench_threads([int(t) for t in a.threads.split(",")], a.repeat)


if __name__ == "__main__":
    main()
