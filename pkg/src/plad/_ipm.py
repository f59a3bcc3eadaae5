"""Primal-dual interior point method for least absolute deviation problems.

Works on the bounded dual of ``min_g ||y - A g||_1``::

    max y'x  subject to  A'x = A'1/2,  0 <= x <= 1

with Mehrotra predictor-corrector steps. The regression coefficients are the
multipliers of the equality constraint; ``d = 2x - 1`` are the dual signs.
Each Newton step solves one ``p x p`` system ``A' diag(q) A``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

STEP_SCALE = 0.99995


class DenseOperator:
    def __init__(self, A):
        self.A = np.asarray(A, dtype=np.float64)
        self.shape = self.A.shape

    def matvec(self, g):
        return self.A @ g

    def rmatvec(self, v):
        return self.A.T @ v

    def normal(self, q):
        return (self.A.T * q) @ self.A

    def dense(self):
        return self.A


class AugmentedOperator:
    """``[X; lam * I]`` without materializing the identity block."""

    def __init__(self, X, lam: float):
        self.X = np.asarray(X, dtype=np.float64)
        self.lam = float(lam)
        n, p = self.X.shape
        self.n = n
        self.shape = (n + p, p)

    def matvec(self, g):
        return np.concatenate([self.X @ g, self.lam * g])

    def rmatvec(self, v):
        return self.X.T @ v[: self.n] + self.lam * v[self.n :]

    def normal(self, q):
        M = (self.X.T * q[: self.n]) @ self.X
        M[np.diag_indices_from(M)] += self.lam**2 * q[self.n :]
        return M

    def dense(self):
        return np.vstack([self.X, self.lam * np.eye(self.X.shape[1])])


@dataclass
class IPMResult:
    gamma: np.ndarray
    dual: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _factor(M):
    try:
        return linalg.cho_factor(M, check_finite=False)
    except linalg.LinAlgError:
        jitter = 1e-13 * max(np.max(np.diag(M)), 1.0)
        for _ in range(6):
            M = M + jitter * np.eye(M.shape[0])
            try:
                return linalg.cho_factor(M, check_finite=False)
            except linalg.LinAlgError:
                jitter *= 100.0
        raise


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    with np.errstate(over="ignore"):  # subnormal dv gives +inf, which is the right bound
        return float(np.min(-v[neg] / dv[neg]))


def frisch_newton(op, y, max_iter: int = 200, gap_tol: float = 1e-12) -> IPMResult:
    """Minimize ``||y - A g||_1`` for the operator ``op``.

    Starts from ``g = 0`` with dual slacks ``max(|y_i|, 1)`` on both sides of
    each residual, which is feasible for the residual equation and scale aware.
    """
    y = np.asarray(y, dtype=np.float64)
    m, p = op.shape
    b = 0.5 * op.rmatvec(np.ones(m))

    x = np.full(m, 0.5)
    s = 1.0 - x
    gamma = np.zeros(p)
    scale = np.maximum(np.abs(y), 1.0)
    w = scale + np.maximum(y, 0.0)
    z = scale + np.maximum(-y, 0.0)

    best_gamma, best_obj = gamma.copy(), float(np.abs(y).sum())
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        Ag = op.matvec(gamma)
        r = y - Ag
        obj = float(np.abs(r).sum())
        if obj < best_obj:
            best_obj, best_gamma = obj, gamma.copy()
        rb = b - op.rmatvec(x)
        e = r - w + z
        d = 2.0 * x - 1.0
        dual_obj = float(y @ d)
        ynorm = 1.0 + best_obj
        feas = np.max(np.abs(rb), initial=0.0) <= 1e-9 * (1.0 + np.max(np.abs(b), initial=0.0))
        if feas and abs(obj - dual_obj) <= gap_tol * ynorm and (x @ z + s @ w) <= gap_tol * ynorm:
            converged = True
            break
        # rounding can land a step on the boundary; keep the best iterate
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            ratio = z / x + w / s
        if not (np.all(np.isfinite(ratio)) and np.all(ratio > 0) and np.all(np.isfinite(gamma))):
            break

        q = 1.0 / ratio
        fac = _factor(op.normal(q))

        def direction(r1, r2):
            rho = e - r2 / s + r1 / x
            dg = linalg.cho_solve(fac, op.rmatvec(q * rho) - rb, check_finite=False)
            dx = q * (rho - op.matvec(dg))
            dz = (r1 - z * dx) / x
            dw = (r2 + w * dx) / s
            return dx, dg, dz, dw

        # predictor
        dx, dg, dz, dw = direction(-x * z, -s * w)
        ap = min(1.0, _max_step(x, dx), _max_step(s, -dx))
        ad = min(1.0, _max_step(z, dz), _max_step(w, dw))
        mu = (x @ z + s @ w) / (2 * m)
        mu_aff = ((x + ap * dx) @ (z + ad * dz) + (s - ap * dx) @ (w + ad * dw)) / (2 * m)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        r1 = sigma * mu - x * z - dx * dz
        r2 = sigma * mu - s * w + dx * dw
        dx, dg, dz, dw = direction(r1, r2)
        ap = min(1.0, STEP_SCALE * _max_step(x, dx), STEP_SCALE * _max_step(s, -dx))
        ad = min(1.0, STEP_SCALE * _max_step(z, dz), STEP_SCALE * _max_step(w, dw))

        # s is updated on its own: recomputing 1 - x loses the small slacks
        x = x + ap * dx
        s = s - ap * dx
        gamma = gamma + ad * dg
        z = z + ad * dz
        w = w + ad * dw

    obj = float(np.abs(y - op.matvec(gamma)).sum())
    if obj <= best_obj:
        best_obj, best_gamma = obj, gamma
    return IPMResult(
        gamma=best_gamma,
        dual=2.0 * x - 1.0,
        objective=best_obj,
        iterations=it,
        converged=converged,
    )
