"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_backends.py [--repeat 5]

Both backends are imported side by side (the env switch only picks the
default), so one process can run both. The first numba call of each kernel
is made before timing so compilation is excluded.
"""
import argparse
import time

import numpy as np

from ssrf import _kernels
from ssrf._config import TOL


def _cases(rng):
    A = rng.standard_normal((60, 60))
    A = A + A.T
    F = rng.standard_normal((80, 10))
    y = F @ rng.standard_normal(10) + rng.standard_normal(80)
    Fraw = rng.standard_normal((80, 500))
    yraw = Fraw[:, :5].sum(axis=1) + rng.standard_normal(80)
    X = rng.standard_normal((500, 100))
    yl = rng.standard_normal(100)
    grid = np.geomspace(1.0, 1e-3, 50)
    qs = np.full(500, 2, dtype=np.int64)
    tol, sweeps = TOL.cd_coef_change, TOL.cd_max_sweeps
    return {
        "jacobi 60x60": ("jacobi", (A, TOL.jacobi_offdiag, TOL.jacobi_max_sweeps)),
        "cd_enet 80x10": ("cd_enet", (F, y, 80.0, 0.05, 0.0, np.zeros(10), tol, sweeps)),
        "cd_enet 80x500": ("cd_enet", (Fraw, yraw, 80.0, 0.05, 0.0, np.zeros(500), tol, sweeps)),
        "cv_path 80x10 g50": ("cv_path", (F, y, 1, grid, 64, 1.0, tol, sweeps)),
        "lag_ols 500x100 q2": ("lag_ols", (X, yl, 1, qs, 2, TOL.rank_deficient)),
    }


def _time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _maxdiff(a, b):
    if isinstance(a, tuple):
        return max(_maxdiff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        return float("nan")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max |diff|':>12}")
    for label, (name, kargs) in _cases(rng).items():
        fast = getattr(_kernels, f"{name}_numba")
        slow = getattr(_kernels, f"{name}_numpy")
        fast(*kargs)  # compile or load from cache
        t_fast, out_fast = _time(fast, kargs, args.repeat)
        t_slow, out_slow = _time(slow, kargs, max(1, args.repeat // 2))
        print(f"{label:<22}{1e3 * t_slow:>12.2f}{1e3 * t_fast:>12.2f}"
              f"{t_slow / t_fast:>9.1f}x{_maxdiff(out_fast, out_slow):>12.2e}")


if __name__ == "__main__":
    main()
