"""Coordinate-descent lasso, the Gaussian-noise baseline.

Objective ``0.5 ||y - X b||_2^2 + lam ||b||_1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Coefficients, _as_values


class SweepLimit(RuntimeWarning):
    pass


@dataclass
class LassoFit:
    coefficients: Coefficients
    objective: float
    kkt_gap: float
    iterations: int
    converged: bool
    lam: float

    @property
    def beta(self) -> np.ndarray:
        return self.coefficients.beta

    @property
    def support(self) -> frozenset:
        return self.coefficients.support


def lasso_objective(X, y, beta, lam: float) -> float:
    A = _as_values(X)
    r = np.asarray(y) - A @ beta
    return float(0.5 * r @ r + lam * np.abs(beta).sum())


def lasso_kkt_gap(X, y, beta, lam: float) -> float:
    """Largest violation of the lasso optimality conditions.

    ``|X_j'r| <= lam`` where ``beta_j = 0`` and ``X_j'r = lam sign(beta_j)``
    elsewhere, with ``r = y - X beta``.
    """
    A = _as_values(X)
    beta = np.asarray(beta, dtype=np.float64)
    g = A.T @ (np.asarray(y) - A @ beta)
    zero = beta == 0
    viol = np.where(zero, np.maximum(np.abs(g) - lam, 0.0), np.abs(g - lam * np.sign(beta)))
    return float(np.max(viol, initial=0.0))


def fit_lasso(X, y, lam: float, tol: float = 1e-10, max_sweeps: int = 100_000,
              debug: bool = False, kernel=None) -> LassoFit:
    """Cyclic coordinate descent with soft thresholding, started at zero.

    Stops when the largest coefficient change in a sweep is below
    ``tol * (1 + ||beta||_inf)``. With ``debug=True`` the objective is
    recomputed after every sweep and asserted to be nonincreasing.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    A = np.asfortranarray(_as_values(X), dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = A.shape[1]
    sweeps_fn = kernel or _kernels.cd_sweeps
    col_sq = np.einsum("ij,ij->j", A, A)
    beta = np.zeros(p)
    resid = y.copy()

    if debug:
        prev = lasso_objective(A, y, beta, lam)
        sweeps, converged = 0, False
        while sweeps < max_sweeps and not converged:
            _, converged = sweeps_fn(A, col_sq, beta, resid, float(lam), 1, float(tol))
            sweeps += 1
            cur = lasso_objective(A, y, beta, lam)
            assert cur <= prev + 1e-10 * (1.0 + abs(prev)), f"objective increased at sweep {sweeps}"
            prev = cur
    else:
        sweeps, converged = sweeps_fn(A, col_sq, beta, resid, float(lam), int(max_sweeps), float(tol))

    if not converged:
        warnings.warn(f"coordinate descent hit the sweep limit ({max_sweeps})", SweepLimit, stacklevel=2)
    return LassoFit(
        coefficients=Coefficients(beta),
        objective=lasso_objective(A, y, beta, lam),
        kkt_gap=lasso_kkt_gap(A, y, beta, lam),
        iterations=int(sweeps),
        converged=bool(converged),
        lam=float(lam),
    )


def lasso_penalty_known_sigma(n: int, sigma: float, lambda_base: float) -> float:
    """``sigma * lambda_base``, or ``0.01 * lambda_base`` in the noiseless case."""
    if n < 1:
        raise ValueError("n must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return 0.01 * lambda_base if sigma == 0 else sigma * lambda_base


def lasso_base_penalty(n: int, p: int) -> float:
    return math.sqrt(2.0 * n * math.log(p))
