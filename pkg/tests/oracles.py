"""Reference computations used only by the tests.

They avoid the package's own LP code paths: LPs go through cvxpy with GLPK
(a different simplex implementation), quantiles through mpmath.
"""
import cvxpy as cp
import mpmath as mp
import numpy as np


def lad_kkt_gap(A, y, gamma, tol=1e-8):
    """min ||A_F' d + g||_inf over |d| <= 1, evaluated exactly at the LP answer."""
    A = np.asarray(A, dtype=float)
    r = np.asarray(y) - A @ gamma
    free = np.abs(r) <= tol
    g = A[~free].T @ np.sign(r[~free])
    if not free.any():
        return float(np.max(np.abs(g), initial=0.0))
    AF = A[free].T
    d = cp.Variable(int(free.sum()))
    prob = cp.Problem(cp.Minimize(cp.norm_inf(AF @ d + g)), [cp.abs(d) <= 1])
    prob.solve(solver=cp.GLPK)
    dv = np.clip(d.value, -1, 1)
    return float(np.max(np.abs(AF @ dv + g)))


def plad_optimum(X, y, lam):
    """Optimal PLAD objective via GLPK."""
    A = np.asarray(X, dtype=float)
    g = cp.Variable(A.shape[1])
    prob = cp.Problem(cp.Minimize(cp.norm1(y - A @ g) + lam * cp.norm1(g)))
    prob.solve(solver=cp.GLPK)
    return float(prob.value), np.asarray(g.value)


def lasso_solution(X, y, lam):
    A = np.asarray(X, dtype=float)
    b = cp.Variable(A.shape[1])
    prob = cp.Problem(cp.Minimize(0.5 * cp.sum_squares(y - A @ b) + lam * cp.norm1(b)))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return np.asarray(b.value)


def normal_quantile(u, dps=40):
    """Bisection on the erfc-based normal CDF at ``dps`` digits."""
    with mp.workdps(dps):
        u = mp.mpf(u)
        lo, hi = mp.mpf(-40), mp.mpf(40)
        for _ in range(4 * dps):
            mid = (lo + hi) / 2
            if mp.erfc(-mid / mp.sqrt(2)) / 2 < u:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)
