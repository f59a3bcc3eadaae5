"""Pure-Python coordinate descent, used when the compiled kernel is unavailable.

Same contract as ``plad._cd.cd_sweeps``.
"""
import numpy as np


def cd_sweeps(X, col_sq, beta, resid, lam, max_sweeps, tol):
    p = X.shape[1]
    cols = [np.ascontiguousarray(X[:, j]) for j in range(p)]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        max_abs = 0.0
        for j in range(p):
            old = beta[j]
            cj = col_sq[j]
            if cj == 0.0:
                continue
            rho = float(cols[j] @ resid) + cj * old
            if rho > lam:
                new = (rho - lam) / cj
            elif rho < -lam:
                new = (rho + lam) / cj
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                resid -= delta * cols[j]
                beta[j] = new
            max_delta = max(max_delta, abs(delta))
            max_abs = max(max_abs, abs(new))
        if max_delta < tol * (1.0 + max_abs):
            return sweep, True
    return max_sweeps, False
