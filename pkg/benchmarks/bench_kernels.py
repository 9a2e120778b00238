"""Compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times one signal-task trajectory (window [0, 2], 51 samples, beta = 10
drive) per dimension and one Duffing trajectory, checks that both
implementations agree, and prints a table.
"""
import argparse
import time

import numpy as np

from quditrc import backend
from quditrc.operators import ground_state

TOL = (1e-10, 1e-8, 1e-3, 0.1)


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--dims", type=int, nargs="+", default=[2, 4, 8, 15])
    args = parser.parse_args()
    if "compiled" not in backend.IMPLEMENTATIONS:
        raise SystemExit("compiled extension not built; run pip install -e . first")
    times = np.linspace(0.0, 2.0, 51)
    drive = (1.0, -7.0, 1.0, 5.0, 6.0, 0.3, 10.0, 0.0)  # Omega, K, kappa, alpha, omega, phi, beta, t0
    cases = [(f"qudit d={d}", 0, ground_state(d)) for d in args.dims] + [("duffing", 1, 0j)]
    print(f"{'case':<12} {'compiled ms':>12} {'python ms':>11} {'speedup':>8} {'steps':>6} {'max diff':>9}")
    for name, which, y0 in cases:
        res = {}
        for impl in ("compiled", "python"):
            fn = backend.IMPLEMENTATIONS[impl][which]
            res[impl] = _time(lambda: fn(y0, *drive, times, *TOL), args.repeat)
        (tc, (yc, _, nc)), (tp, (yp, _, _)) = res["compiled"], res["python"]
        diff = float(np.max(np.abs(np.asarray(yc) - np.asarray(yp))))
        print(f"{name:<12} {1e3 * tc:12.2f} {1e3 * tp:11.1f} {tp / tc:8.0f} {nc:6d} {diff:9.1e}")


if __name__ == "__main__":
    main()
