# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic coordinate descent for the lasso."""
from libc.math cimport fabs


def cd_sweeps(const double[::1, :] X, const double[::1] col_sq, double[::1] beta,
              double[::1] resid, double lam, int max_sweeps, double tol):
    """Run sweeps of ``0.5 ||y - X b||^2 + lam ||b||_1`` in place.

    ``resid`` must equal ``y - X beta`` on entry and is kept in sync.
    Returns ``(sweeps, converged)``; convergence means the largest coordinate
    change in a sweep fell below ``tol * (1 + max |beta_j|)``.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t i, j
    cdef int sweep
    cdef int done = 0
    cdef double rho, new, delta, max_delta, max_abs, old
    with nogil:
        for sweep in range(1, max_sweeps + 1):
            max_delta = 0.0
            max_abs = 0.0
            for j in range(p):
                old = beta[j]
                if col_sq[j] == 0.0:
                    continue
                rho = 0.0
                for i in range(n):
                    rho = rho + X[i, j] * resid[i]
                rho = rho + col_sq[j] * old
                if rho > lam:
                    new = (rho - lam) / col_sq[j]
                elif rho < -lam:
                    new = (rho + lam) / col_sq[j]
                else:
                    new = 0.0
                delta = new - old
                if delta != 0.0:
                    for i in range(n):
                        resid[i] = resid[i] - delta * X[i, j]
                    beta[j] = new
                if fabs(delta) > max_delta:
                    max_delta = fabs(delta)
                if fabs(new) > max_abs:
                    max_abs = fabs(new)
            if max_delta < tol * (1.0 + max_abs):
                done = 1
                break
    if done:
        return sweep, True
    return max_sweeps, False
