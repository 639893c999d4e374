"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R]

Both variants are imported directly from ``poncelet._kernels``, so the
comparison does not depend on ``PONCELET_DISABLE_NUMBA``. Results are also
checked for agreement; a mismatch exits nonzero.
"""
import argparse
import math
import sys
import time

import numpy as np

from poncelet import _accel, _kernels
from poncelet.canonical import build_chart
from poncelet.conics import ConfocalConic, ConfocalFamily
from poncelet.linespace import support


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size):
    rng = np.random.default_rng(0)
    family = ConfocalFamily(4.0, 1.0)
    A, B = ConfocalConic(family, 0.0).axes_sq
    gap = 1e-10 * 2.0
    phi = rng.uniform(0.0, 2 * math.pi, size)
    p = rng.uniform(-0.99, 0.99, size) * support(family, 0.0, phi)
    chart = build_chart(family, -0.5, 4096)
    args = chart._args()
    xs = rng.uniform(0.0, 1.0, size)
    return {
        "reflect_many": (_kernels.reflect_many_jit, _kernels.reflect_many_np, (phi, p, A, B, gap)),
        "iterate_many x50": (_kernels.iterate_many_jit, _kernels.iterate_many_np, (phi, p, A, B, gap, 50)),
        "chart_eval": (_kernels.chart_eval_jit, _kernels.chart_eval_np, (phi, *args)),
        "chart_invert": (_kernels.chart_invert_jit, _kernels.chart_invert_np, (xs, *args)),
    }


def _agree(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    worst = 0.0
    for u, v in zip(a, b):
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        worst = max(worst, float(np.max(np.abs(u - v))))
    return worst


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return 0

    print(f"{'kernel':<18} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8} {'max diff':>10}")
    bad = False
    for name, (jit_fn, np_fn, call) in cases(args.size).items():
        jit_fn(*call)  # compile outside the timing
        diff = _agree(jit_fn(*call), np_fn(*call))
        t_jit = best_of(lambda: jit_fn(*call), args.repeat)
        t_np = best_of(lambda: np_fn(*call), args.repeat)
        bad |= diff > 1e-9
        print(f"{name:<18} {1e3 * t_jit:>11.2f} {1e3 * t_np:>11.2f} {t_np / t_jit:>7.1f}x {diff:>10.1e}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
