"""Compiled vs pure-Python coordinate-descent sweeps for the lasso baseline.

    python3 benchmarks/bench_lasso_cd.py [--n 200] [--p 400] [--repeat 3]

Both kernels run the same fits (Table-2 style data, sigma = 1) and must agree
to rounding; the script prints wall times and the speedup.
"""
import argparse
import math
import sys
import time

import numpy as np

from plad import _kernels
from plad.core import normalize_columns
from plad.lasso import fit_lasso


def _problem(n, p, k, seed):
    rng = np.random.default_rng(seed)
    X = normalize_columns(rng.standard_normal((n, p)))
    beta = np.zeros(p)
    beta[:k] = 3.0
    return X, X.values @ beta + rng.standard_normal(n)


def _time(kernel, X, y, lam, repeat):
    best, fit = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        fit = fit_lasso(X, y, lam, kernel=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, fit


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=400)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _kernels.BACKEND != "cython":
        print("compiled kernel not built; only the Python kernel is available", file=sys.stderr)
    X, y = _problem(args.n, args.p, args.k, args.seed)
    rows = []
    for lam_scale in (0.25, 1.0):
        lam = lam_scale * math.sqrt(2 * args.n * math.log(args.p))
        t_py, f_py = _time(_kernels.cd_sweeps_py, X, y, lam, args.repeat)
        t_c, f_c = _time(_kernels.cd_sweeps, X, y, lam, args.repeat)
        diff = float(np.max(np.abs(f_py.beta - f_c.beta)))
        rows.append((lam, f_c.iterations, t_py, t_c, diff))

    print(f"n={args.n} p={args.p} backend={_kernels.BACKEND}")
    print(f"{'lambda':>9} {'sweeps':>7} {'python s':>10} {'compiled s':>11} {'speedup':>8} {'max |diff|':>11}")
    for lam, sweeps, t_py, t_c, diff in rows:
        print(f"{lam:9.3f} {sweeps:7d} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
