"""L1-penalized LAD fitting.

The penalty ``lam * ||g||_1`` is written as ``p`` extra observations with
response 0 and a single regressor ``lam`` in column ``j``; the penalized fit
is then an ordinary LAD fit on ``n + p`` rows. The default backend is the
interior point method in :mod:`plad._ipm`, followed by a purification step
that moves the iterate to an exact vertex of the optimal face so that zero
coefficients are exactly zero. A simplex solve (HiGHS) is used as fallback
and as an independent cross-check.
"""
from __future__ import annotations

import enum
import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from . import _ipm
from .core import Coefficients, DimensionMismatch, _as_values
from .kkt import basis_dual_gap, kkt_gap

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MAX_IPM_ITER = 200


class SolverStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    ITERATION_LIMIT = "IterationLimit"
    DEGENERATE = "Degenerate"


class IterationLimit(RuntimeWarning):
    pass


class EmptySupport(UserWarning):
    pass


@dataclass(frozen=True)
class AugmentedProblem:
    """LAD problem with the penalty folded in as pseudo-observations.

    ``X_aug`` stacks the ``n`` original rows over ``lam * I_p``; ``y_aug``
    appends ``p`` zeros.
    """

    X: np.ndarray
    y: np.ndarray
    lam: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def X_aug(self) -> np.ndarray:
        return np.vstack([self.X, self.lam * np.eye(self.p)])

    @property
    def y_aug(self) -> np.ndarray:
        return np.concatenate([self.y, np.zeros(self.p)])

    def active_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows that carry information: all-zero penalty rows are dropped when ``lam == 0``."""
        if self.lam == 0:
            return self.X, self.y
        return self.X_aug, self.y_aug

    def lad_objective(self, gamma) -> float:
        r = self.y - self.X @ gamma
        return float(np.abs(r).sum() + self.lam * np.abs(gamma).sum())


@dataclass
class FitResult:
    coefficients: Coefficients
    residuals: np.ndarray
    objective: float
    kkt_gap: float
    iterations: int
    solver_status: SolverStatus
    lam: float = 0.0
    backend: str = "ipm"
    timings: dict = field(default_factory=dict)

    @property
    def beta(self) -> np.ndarray:
        return self.coefficients.beta

    @property
    def support(self) -> frozenset:
        return self.coefficients.support


def augment(X, y, lam: float) -> AugmentedProblem:
    A = _as_values(X)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"y has shape {y.shape}, X has {A.shape[0]} rows")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return AugmentedProblem(X=A, y=y, lam=float(lam))


def _vertex(problem: AugmentedProblem, r_aug):
    """Exact basic solution whose basis rows are the smallest residuals.

    Rows are weighted by ``1 / |r_i|`` before a column-pivoted QR on ``A'`` so
    that near-zero residual rows are preferred while keeping the basis
    nonsingular. Penalty rows in the basis pin their coefficient to exactly 0.
    Returns ``(gamma, basis)`` or ``None`` when no full-rank basis exists.
    """
    n, p = problem.n, problem.p
    rows = np.arange(n + p)
    if problem.lam == 0:
        rows = rows[:n]  # penalty rows are identically zero
    A = problem.X_aug[rows]
    r = np.abs(np.asarray(r_aug)[rows])
    delta = 1e-14 * max(1.0, float(np.max(np.abs(problem.y), initial=0.0)))
    wts = 1.0 / (r + delta)
    wts /= wts.max()
    # only the most promising rows are worth pivoting over
    ncand = min(rows.size, 2 * p + 10)
    cand = np.argsort(r, kind="stable")[:ncand]
    M = (A[cand] * wts[cand, None]).T
    _, R, piv = linalg.qr(M, mode="economic", pivoting=True, check_finite=False)
    if R.shape[0] < p:
        return None
    diag = np.abs(np.diag(R))
    if diag[p - 1] <= 1e-13 * diag[0]:
        return None
    basis = rows[cand[piv[:p]]]

    pen = basis[basis >= n] - n
    data = basis[basis < n]
    free = np.setdiff1d(np.arange(p), pen)
    gamma = np.zeros(p)
    if free.size:
        try:
            gamma[free] = linalg.solve(problem.X[np.ix_(data, free)], problem.y[data], check_finite=False)
        except (linalg.LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(gamma)):
            return None
    return gamma, basis


def _certify(problem: AugmentedProblem, gamma, basis, tol):
    A, y = problem.active_rows()
    r = y - A @ gamma
    gap = None
    if basis is not None:
        gap = basis_dual_gap(A, r, basis, tol)
    if gap is None:
        gap = kkt_gap(A, y, gamma, tol)
    return gap


def _simplex(problem: AugmentedProblem, method: str = "highs-ds"):
    A, y = problem.active_rows()
    m, p = A.shape
    # variables: gamma (free), u >= 0, v >= 0 with A gamma + u - v = y
    c = np.concatenate([np.zeros(p), np.ones(2 * m)])
    A_eq = np.hstack([A, np.eye(m), -np.eye(m)])
    bounds = [(None, None)] * p + [(0.0, None)] * (2 * m)
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method=method)
    if res.x is None:
        raise RuntimeError(f"simplex backend failed: {res.message}")
    return res.x[:p], int(getattr(res, "nit", 0) or 0)


def _count_zero_residuals(problem: AugmentedProblem, gamma, tol) -> int:
    r = problem.y - problem.X @ gamma
    k = int(np.sum(np.abs(r) <= tol))
    if problem.lam > 0:
        k += int(np.sum(np.abs(gamma) * problem.lam <= tol))
    return k


def solve_lad(problem: AugmentedProblem, tol: float = DEFAULT_TOL, backend: str = "ipm") -> FitResult:
    """Minimize ``sum |y_aug - X_aug g|`` and certify the result.

    Parameters
    ----------
    problem : AugmentedProblem
    tol : float
        Residuals with ``|r_i| <= tol`` count as zero in the KKT certificate,
        and the certificate must come out at most ``tol``.
    backend : {"ipm", "simplex"}
        ``"simplex"`` skips the interior point stage entirely.

    Returns
    -------
    FitResult
        ``solver_status`` is ``IterationLimit`` when no certified point was
        found (the best iterate is returned) and ``Degenerate`` when more than
        ``p`` residuals vanish, i.e. the minimizer may not be unique.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0 = time.perf_counter()
    p = problem.p
    candidates = []  # (gamma, basis, iterations, backend)

    if backend == "ipm":
        if problem.lam > 0:
            op = _ipm.AugmentedOperator(problem.X, problem.lam)
            y_rows = problem.y_aug
        else:
            op = _ipm.DenseOperator(problem.X)
            y_rows = problem.y
        res = _ipm.frisch_newton(op, y_rows, max_iter=MAX_IPM_ITER)
        r_aug = problem.y_aug - problem.X_aug @ res.gamma
        vert = _vertex(problem, r_aug)
        if vert is not None:
            candidates.append((vert[0], vert[1], res.iterations, "ipm"))
        candidates.append((res.gamma, None, res.iterations, "ipm"))
    elif backend != "simplex":
        raise ValueError(f"unknown backend {backend!r}")

    best = None
    for gamma, basis, iters, name in candidates:
        gap = _certify(problem, gamma, basis, tol)
        obj = problem.lad_objective(gamma)
        if best is None or (gap <= tol and (best[1] > tol or obj < best[2])):
            best = (gamma, gap, obj, iters, name)
        if gap <= tol:
            break

    if best is None or best[1] > tol:
        gamma_s, iters = _simplex(problem)
        r_aug = problem.y_aug - problem.X_aug @ gamma_s
        vert = _vertex(problem, r_aug)
        for gamma, basis in ([vert] if vert is not None else []) + [(gamma_s, None)]:
            gap = _certify(problem, gamma, basis, tol)
            obj = problem.lad_objective(gamma)
            if best is None or (gap <= tol and (best[1] > tol or obj <= best[2] + 1e-9 * (1 + obj))) or (
                best[1] > tol and gap < best[1]
            ):
                best = (gamma, gap, obj, iters, "simplex")
            if gap <= tol:
                break

    gamma, gap, obj, iters, name = best
    if gap > tol:
        status = SolverStatus.ITERATION_LIMIT
        warnings.warn(f"KKT certificate {gap:.3g} exceeds tol {tol:.3g}", IterationLimit, stacklevel=2)
    elif _count_zero_residuals(problem, gamma, tol) > p:
        status = SolverStatus.DEGENERATE
    else:
        status = SolverStatus.OPTIMAL
    return FitResult(
        coefficients=Coefficients(gamma),
        residuals=problem.y - problem.X @ gamma,
        objective=obj,
        kkt_gap=gap,
        iterations=iters,
        solver_status=status,
        lam=problem.lam,
        backend=name,
        timings={"solve_seconds": time.perf_counter() - t0},
    )


def fit_plad(X, y, lam: float, tol: float = DEFAULT_TOL, backend: str = "ipm") -> FitResult:
    """Fit ``argmin ||y - X g||_1 + lam ||g||_1``."""
    return solve_lad(augment(X, y, lam), tol=tol, backend=backend)


def refit_on_support(X, y, support, tol: float = DEFAULT_TOL) -> FitResult:
    """Unpenalized LAD on the selected columns; other coefficients are 0."""
    A = _as_values(X)
    n, p = A.shape
    cols = np.array(sorted(int(j) for j in support), dtype=int)
    y = np.asarray(y, dtype=np.float64)
    if cols.size == 0:
        warnings.warn("empty support: refit returns the zero vector", EmptySupport, stacklevel=2)
        return FitResult(
            coefficients=Coefficients(np.zeros(p)),
            residuals=y.copy(),
            objective=float(np.abs(y).sum()),
            kkt_gap=0.0,
            iterations=0,
            solver_status=SolverStatus.OPTIMAL,
        )
    if cols.size >= n:
        raise ValueError(f"support of size {cols.size} is not smaller than n={n}")
    sub = solve_lad(augment(A[:, cols], y, 0.0), tol=tol)
    beta = np.zeros(p)
    beta[cols] = sub.beta
    return FitResult(
        coefficients=Coefficients(beta),
        residuals=y - A @ beta,
        objective=float(np.abs(y - A @ beta).sum()),
        kkt_gap=sub.kkt_gap,
        iterations=sub.iterations,
        solver_status=sub.solver_status,
        backend=sub.backend,
        timings=sub.timings,
    )


__all__ = [
    "AugmentedProblem",
    "FitResult",
    "SolverStatus",
    "augment",
    "fit_plad",
    "refit_on_support",
    "solve_lad",
]
