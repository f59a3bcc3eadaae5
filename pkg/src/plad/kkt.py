"""Optimality certificates for least absolute deviation fits.

For ``min_g sum_i |y_i - (A g)_i|`` a point is optimal iff there are dual
weights ``d`` with ``d_i = sign(r_i)`` on rows with nonzero residual,
``d_i in [-1, 1]`` elsewhere and ``A' d = 0``. The gap reported here is the
smallest achievable ``||A' d||_inf`` when rows with ``|r_i| <= tol`` are
treated as free.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

_HIGHS_OPTS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _split(A, r, tol):
    free = np.abs(r) <= tol
    g = A[~free].T @ np.sign(r[~free])
    return free, g


def kkt_gap(A, y, gamma, tol: float = 1e-8) -> float:
    """Certified KKT violation of ``gamma`` for the LAD problem ``(A, y)``.

    The free dual weights are chosen by a small linear program; the returned
    number is ``||A' d||_inf`` evaluated exactly at the (clipped) LP solution,
    so it is an upper bound on the true minimum regardless of LP tolerances.
    """
    A = np.asarray(A, dtype=np.float64)
    r = np.asarray(y, dtype=np.float64) - A @ np.asarray(gamma, dtype=np.float64)
    free, g = _split(A, r, tol)
    nf = int(free.sum())
    if nf == 0:
        return float(np.max(np.abs(g), initial=0.0))
    AF = A[free].T  # p x nf
    p = A.shape[1]
    c = np.zeros(nf + 1)
    c[-1] = 1.0
    ones = np.ones((p, 1))
    A_ub = np.vstack([np.hstack([AF, -ones]), np.hstack([-AF, -ones])])
    b_ub = np.concatenate([-g, g])
    bounds = [(-1.0, 1.0)] * nf + [(0.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs", options=_HIGHS_OPTS)
    if res.x is None:
        d = np.zeros(nf)
    else:
        d = np.clip(res.x[:nf], -1.0, 1.0)
    return float(np.max(np.abs(AF @ d + g), initial=0.0))


def basis_dual_gap(A, r, basis, tol: float = 1e-8) -> float | None:
    """KKT gap from the unique dual of a nondegenerate vertex.

    Returns ``None`` when the vertex is degenerate (some nonbasic row has
    ``|r_i| <= tol``), when the basis is singular, or when the implied
    dual weights leave ``[-1, 1]``; callers then fall back to :func:`kkt_gap`.
    """
    basis = np.asarray(basis, dtype=int)
    mask = np.zeros(A.shape[0], dtype=bool)
    mask[basis] = True
    if np.any(np.abs(r[~mask]) <= tol):
        return None
    g = A[~mask].T @ np.sign(r[~mask])
    try:
        d = np.linalg.solve(A[basis].T, -g)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(d)) or np.max(np.abs(d), initial=0.0) > 1.0 + 1e-12:
        return None
    d = np.clip(d, -1.0, 1.0)
    return float(np.max(np.abs(A[basis].T @ d + g), initial=0.0))
