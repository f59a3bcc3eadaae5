"""Penalty level selection.

Every rule targets ``P(lam >= c ||S||_inf) >= 1 - alpha`` where
``S = X' I`` and ``I`` is a Rademacher vector. The law of ``S`` depends only
on ``X``, so none of the rules needs the noise distribution.

All logarithms are natural.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DesignMatrix, _as_values

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# rational approximation to the normal quantile (P. J. Acklam), |rel err| < 1.15e-9
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


class DomainError(ValueError):
    pass


class InadmissiblePenalty(UserWarning):
    pass


class ScreeningWarning(UserWarning):
    pass


class PenaltyRule(str, enum.Enum):
    ASYMPTOTIC = "asymptotic"
    SIMPLE = "simple"
    REFINED = "refined"
    MC = "mc"
    FIXED = "fixed"


@dataclass(frozen=True)
class PenaltySpec:
    rule: PenaltyRule
    c: float = 1.1
    alpha: float = 0.05
    fixed_value: float | None = None
    mc_reps: int = 1000
    seed: int = 0
    q: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "rule", PenaltyRule(self.rule))
        if not self.c > 1:
            raise ValueError("c must exceed 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if (self.fixed_value is not None) != (self.rule is PenaltyRule.FIXED):
            raise ValueError("fixed_value is required exactly when rule is 'fixed'")
        if self.fixed_value is not None and self.fixed_value < 0:
            raise ValueError("fixed_value must be nonnegative")


@dataclass(frozen=True)
class MomentCondition:
    q: float
    B: float
    admissible: bool


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def _lower_quantile(u: float) -> float:
    """Quantile for ``0 < u <= 0.5``, accurate in the lower tail."""
    if u < _P_LOW:
        t = math.sqrt(-2.0 * math.log(u))
        x = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        )
    else:
        t = u - 0.5
        r = t * t
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * t / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    # one Halley step against the erfc-based CDF
    e = 0.5 * math.erfc(-x / _SQRT2) - u
    g = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - g / (1.0 + 0.5 * x * g)


def inverse_normal_cdf(u: float) -> float:
    """Standard normal quantile, absolute accuracy about 1e-10.

    Upper-tail arguments are reflected through ``1 - u``, which is exact in
    floating point for ``u >= 0.5``, so the tail is resolved from the
    complement rather than from a CDF value rounded near 1.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile argument must lie in (0, 1), got {u}")
    if u == 0.5:
        return 0.0
    if u < 0.5:
        return _lower_quantile(u)
    return -_lower_quantile(1.0 - u)


def a_of_alpha(alpha: float, p: int) -> float:
    """Smallest ``A`` with ``2 p^{-(A-1)} <= alpha``."""
    if p < 2:
        raise ValueError("p must be at least 2")
    return 1.0 + math.log(2.0 / alpha) / math.log(p)


def penalty_asymptotic(n: int, p: int, c: float = 1.1, alpha: float = 0.05) -> float:
    return c * math.sqrt(2.0 * a_of_alpha(alpha, p) * n * math.log(p))


def penalty_simple(n: int, p: int, c: float = 1.0) -> float:
    """``2 c sqrt(n log p)``; covers ``c ||S||_inf`` with probability ``1 - 2/p``."""
    if c < 1:
        raise ValueError("c must be at least 1")
    return 2.0 * c * math.sqrt(n * math.log(p))


def default_penalty(n: int, p: int) -> float:
    """``sqrt(2 n log p)``, the level used throughout the simulation study."""
    return math.sqrt(2.0 * n * math.log(p))


def moment_condition(X, q: float, alpha: float) -> MomentCondition:
    A = _as_values(X)
    n, p = A.shape
    B = float(np.max(np.sum(np.abs(A) ** q, axis=0)) / n)
    z = inverse_normal_cdf(1.0 - alpha / (2.0 * p))
    admissible = bool(n > 1 and z <= (q - 2.0) * math.sqrt(math.log(n)))
    return MomentCondition(q=float(q), B=B, admissible=admissible)


def penalty_refined(n: int, p: int, c: float, alpha: float, q: float, X=None):
    """``c sqrt(n) Phi^{-1}(1 - alpha / 2p)`` and the design moment record.

    The level is valid only when ``Phi^{-1}(1 - alpha/2p) <= (q-2) sqrt(log n)``;
    an :class:`InadmissiblePenalty` warning is issued otherwise but the value is
    still returned.
    """
    if not q > 2:
        raise ValueError("q must exceed 2")
    lam = c * math.sqrt(n) * inverse_normal_cdf(1.0 - alpha / (2.0 * p))
    if X is not None:
        mc = moment_condition(X, q, alpha)
    else:
        z = inverse_normal_cdf(1.0 - alpha / (2.0 * p))
        mc = MomentCondition(q=float(q), B=float("nan"),
                             admissible=bool(n > 1 and z <= (q - 2.0) * math.sqrt(math.log(n))))
    if not mc.admissible:
        warnings.warn(
            f"refined penalty outside its validity range for q={q}, n={n}, p={p}, alpha={alpha}",
            InadmissiblePenalty,
            stacklevel=2,
        )
    return lam, mc


_MC_CHUNK = 256


def rademacher_sup_norms(X, reps: int, seed: int) -> np.ndarray:
    """``||X' I||_inf`` for ``reps`` independent Rademacher vectors ``I``.

    Draws are generated in fixed chunks of 256, chunk ``k`` from the
    sub-stream ``(seed, k)``, so the first ``m`` values do not depend on
    ``reps``.
    """
    A = _as_values(X)
    n = A.shape[0]
    out = np.empty(reps)
    nchunks = -(-reps // _MC_CHUNK)
    for k in range(nchunks):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))
        signs = rng.integers(0, 2, size=(_MC_CHUNK, n), dtype=np.int8).astype(np.float64) * 2.0 - 1.0
        vals = np.max(np.abs(signs @ A), axis=1)
        lo = k * _MC_CHUNK
        hi = min(reps, lo + _MC_CHUNK)
        out[lo:hi] = vals[: hi - lo]
    return out


def empirical_quantile(values, alpha: float) -> float:
    """The ``ceil((1 - alpha) m)``-th order statistic (1-based) of ``m`` values."""
    v = np.sort(np.asarray(values))
    idx = math.ceil((1.0 - alpha) * v.size - 1e-12)
    idx = min(max(idx, 1), v.size)
    return float(v[idx - 1])


def mc_quantile_penalty(X, c: float = 1.1, alpha: float = 0.05, reps: int = 1000, seed: int = 0) -> float:
    """``c`` times the simulated ``1 - alpha`` quantile of ``||S||_inf``."""
    if reps < 100:
        raise ValueError("reps must be at least 100")
    return c * empirical_quantile(rademacher_sup_norms(X, reps, seed), alpha)


def screening_check(X, lam: float) -> set[int]:
    """Columns with ``||X_j||_1 < lam``; their coefficients are forced to zero."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    A = _as_values(X)
    dead = {int(j) for j in np.flatnonzero(np.abs(A).sum(axis=0) < lam)}
    if dead:
        warnings.warn(
            f"penalty {lam:.4g} exceeds the l1 norm of {len(dead)} column(s); "
            "those variables cannot be selected",
            ScreeningWarning,
            stacklevel=2,
        )
    return dead


def resolve_penalty(spec: PenaltySpec, X: DesignMatrix) -> tuple[float, dict]:
    """Evaluate a :class:`PenaltySpec` on a design; returns ``(lam, details)``."""
    n, p = X.n, X.p
    info: dict = {"rule": spec.rule.value, "c": spec.c, "alpha": spec.alpha}
    if spec.rule is PenaltyRule.ASYMPTOTIC:
        info["A_alpha"] = a_of_alpha(spec.alpha, p)
        lam = penalty_asymptotic(n, p, spec.c, spec.alpha)
    elif spec.rule is PenaltyRule.SIMPLE:
        lam = penalty_simple(n, p, spec.c)
        info["coverage_level"] = 1.0 - 2.0 / p
    elif spec.rule is PenaltyRule.REFINED:
        lam, mc = penalty_refined(n, p, spec.c, spec.alpha, spec.q, X)
        info["moment_condition"] = {"q": mc.q, "B": mc.B, "admissible": mc.admissible}
    elif spec.rule is PenaltyRule.MC:
        lam = mc_quantile_penalty(X, spec.c, spec.alpha, spec.mc_reps, spec.seed)
        info.update(reps=spec.mc_reps, seed=spec.seed)
    else:
        lam = float(spec.fixed_value)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScreeningWarning)
        info["dead_columns"] = len(screening_check(X, lam))
    info["lambda"] = lam
    return lam, info
