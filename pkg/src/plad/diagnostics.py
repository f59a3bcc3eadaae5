"""Design-matrix constants and evaluation of the error guarantees.

Sparse eigenvalues are exact when the number of k-subsets fits the budget and
Monte-Carlo otherwise. Restricted eigenvalues are always sampled, so their
minima are optimistic (they can only overestimate the true minimum).
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import _as_values
from .noise import NoiseModel, sample

BRUTE_FORCE_BUDGET = 50_000
_CHUNK = 1000


class Method(str, enum.Enum):
    BRUTE_FORCE = "BruteForce"
    MONTE_CARLO = "MonteCarlo"


class NonpositiveEta(ValueError):
    pass


@dataclass(frozen=True)
class SparseEigenBounds:
    k: int
    lambda_u: float
    lambda_l: float
    method: Method
    samples: int


@dataclass(frozen=True)
class RestrictedEigenvalues:
    k: int
    c_bar: float
    kappa_l: float
    kappa_u: float
    eta_l: float
    eta_u: float
    samples: int
    method: Method = Method.MONTE_CARLO
    optimistic: bool = True  # sampled minima are upper estimates of the true minima


@dataclass(frozen=True)
class TheoremBoundReport:
    c: float
    c_bar: float
    a: float
    C2: float
    C1: float
    condition_I_holds: bool
    error_bound: float
    probability_floor: float
    noiseless_condition: bool | None = None


def _rng(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def _subset_extremes(G, subsets):
    S = np.asarray(subsets, dtype=int)
    sub = G[S[:, :, None], S[:, None, :]]
    ev = np.linalg.eigvalsh(sub)
    return float(ev[:, 0].min()), float(ev[:, -1].max())


def _greedy_correlated(G, k):
    p = G.shape[0]
    off = np.abs(G - np.diag(np.diag(G)))
    if k == 1 or p == 1:
        return [0]
    i, j = np.unravel_index(int(np.argmax(off)), off.shape)
    chosen = [int(i), int(j)]
    while len(chosen) < k:
        score = off[:, chosen].sum(axis=1)
        score[chosen] = -np.inf
        chosen.append(int(np.argmax(score)))
    return chosen[:k]


def sparse_eigen_bounds(X, k: int, budget: int = BRUTE_FORCE_BUDGET, seed: int = 0) -> SparseEigenBounds:
    """Extreme values of ``||Xd||^2 / ||d||^2`` over k-sparse ``d``.

    Enumerates all k-subsets when there are at most ``budget`` of them;
    otherwise samples ``budget`` random subsets plus one greedy subset of
    mutually most correlated columns.
    """
    A = _as_values(X)
    n, p = A.shape
    if not 1 <= k <= min(n, p):
        raise ValueError(f"k must lie in [1, {min(n, p)}]")
    G = A.T @ A
    lo, hi = np.inf, -np.inf
    total = math.comb(p, k)
    if total <= budget:
        combos = itertools.combinations(range(p), k)
        while True:
            block = list(itertools.islice(combos, 4096))
            if not block:
                break
            a, b = _subset_extremes(G, block)
            lo, hi = min(lo, a), max(hi, b)
        return SparseEigenBounds(k, hi, lo, Method.BRUTE_FORCE, total)

    done = 0
    chunk = 0
    while done < budget:
        m = min(_CHUNK, budget - done)
        rng = _rng(seed, chunk)
        block = np.argsort(rng.random((_CHUNK, p)), axis=1)[:m, :k]
        a, b = _subset_extremes(G, block)
        lo, hi = min(lo, a), max(hi, b)
        done += m
        chunk += 1
    a, b = _subset_extremes(G, [_greedy_correlated(G, k)])
    lo, hi = min(lo, a), max(hi, b)
    return SparseEigenBounds(k, hi, lo, Method.MONTE_CARLO, budget + 1)


def _cone_samples(rng, m, p, k, c_bar):
    """``m`` random vectors in the cone, each with its generating set T."""
    H = np.zeros((m, p))
    T = np.empty((m, k), dtype=int)
    keys = rng.random((m, p))
    order = np.argsort(keys, axis=1)
    T[:] = order[:, :k]
    mags = np.abs(rng.standard_normal((m, k))) * rng.choice([-1.0, 1.0], size=(m, k))
    # half the draws concentrate on a random-size prefix of T
    keep = rng.integers(1, k + 1, size=m)
    thin = rng.random(m) < 0.5
    mask = (np.arange(k)[None, :] < keep[:, None]) | ~thin[:, None]
    mags = mags * mask
    rows = np.arange(m)[:, None]
    H[rows, T] = mags
    on_l1 = np.abs(mags).sum(axis=1)
    if p > k:
        rest = order[:, k:]
        count = rng.integers(1, p - k + 1, size=m)
        vals = rng.standard_normal((m, p - k))
        vals *= np.arange(p - k)[None, :] < count[:, None]
        l1 = np.abs(vals).sum(axis=1)
        u = rng.random(m)
        scale = np.where(l1 > 0, on_l1 / c_bar * u / np.where(l1 > 0, l1, 1.0), 0.0)
        H[rows, rest] = vals * scale[:, None]
    on_l2 = np.sqrt((mags**2).sum(axis=1))
    return H, on_l2


def restricted_eigenvalues(X, k: int, c_bar: float, samples: int = 10_000, seed: int = 0) -> RestrictedEigenvalues:
    """Monte-Carlo extremes of ``||Xh||_1 / (n ||h_T||_2)`` and ``||Xh||_2 / (sqrt(n) ||h_T||_2)``.

    Each sample picks a random k-set ``T``, random signed magnitudes on it,
    and off-``T`` mass with ``||h_{T^c}||_1 = u ||h_T||_1 / c_bar``,
    ``u ~ U(0, 1)``. Samples come in chunks of 1000 seeded by
    ``(seed, chunk)``, so increasing ``samples`` only adds draws.
    """
    if samples < 1000:
        raise ValueError("samples must be at least 1000")
    A = _as_values(X)
    n, p = A.shape
    kl = eta_l = np.inf
    ku = eta_u = -np.inf
    done = chunk = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        H, on_l2 = _cone_samples(_rng(seed, chunk), _CHUNK, p, k, c_bar)
        H, on_l2 = H[:m], on_l2[:m]
        XH = H @ A.T
        kap = np.abs(XH).sum(axis=1) / (n * on_l2)
        eta = np.sqrt((XH**2).sum(axis=1)) / (math.sqrt(n) * on_l2)
        kl, ku = min(kl, float(kap.min())), max(ku, float(kap.max()))
        eta_l, eta_u = min(eta_l, float(eta.min())), max(eta_u, float(eta.max()))
        done += m
        chunk += 1
    return RestrictedEigenvalues(k, float(c_bar), kl, ku, eta_l, eta_u, samples)


def theorem_constant(C2: float, lambda_u: float) -> float:
    return 1.0 + 2.0 * C2 * math.sqrt(lambda_u)


def evaluate_theorem_bound(n: int, p: int, k: int, c: float, a: float, C2: float,
                           bounds: SparseEigenBounds, re: RestrictedEigenvalues,
                           lam: float) -> TheoremBoundReport:
    """Closed-form error bound and its design condition.

    ``error_bound`` is the high-probability bound on ``||beta_hat - beta||_2``;
    with sampled restricted eigenvalues it inherits their optimism.
    """
    if not C2 > 1:
        raise ValueError("C2 must exceed 1")
    if not a > 0:
        raise ValueError("a must be positive")
    if not re.eta_l > 0:
        raise NonpositiveEta(f"eta_l = {re.eta_l} makes the bound undefined")
    c_bar = (c - 1.0) / (c + 1.0)
    C1 = theorem_constant(C2, bounds.lambda_u)
    logp = math.log(p)
    lhs = 3.0 * math.sqrt(n) / 16.0 * re.kappa_l
    rhs = lam * math.sqrt(k / n) + C1 * math.sqrt(2.0 * k * logp) * (1.25 + 1.0 / c_bar)
    bound = (
        math.sqrt(2.0 * k * logp / n)
        * 16.0 * (c * math.sqrt(2.0) + 1.25 * C1 + C1 / c_bar)
        / (a * re.eta_l)
        * math.sqrt(1.0 + 1.0 / c_bar)
    )
    floor = 1.0 - 2.0 * p ** (-4.0 * k * (C2**2 - 1.0) + 1.0)
    return TheoremBoundReport(
        c=c, c_bar=c_bar, a=a, C2=C2, C1=C1,
        condition_I_holds=bool(lhs > rhs),
        error_bound=bound,
        probability_floor=floor,
    )


def noiseless_recovery_condition(lam: float, n: int, re_at_cbar1: RestrictedEigenvalues) -> bool:
    """Exact recovery without noise is guaranteed when ``lam < n kappa_l(1)``."""
    if re_at_cbar1.c_bar != 1.0:
        raise ValueError("restricted eigenvalues must be computed with c_bar = 1")
    return bool(lam < n * re_at_cbar1.kappa_l)


def g_function(x, U: float) -> tuple[float, bool]:
    """``G(x) = sum |x_i| min(|x_i|, U)`` and whether its lower bound holds.

    The bound is ``U ||x||_1 / 2`` when ``||x||_1 >= len(x) U / 2`` and
    ``||x||_2^2`` otherwise.
    """
    if not U > 0:
        raise ValueError("U must be positive")
    ax = np.abs(np.asarray(x, dtype=np.float64))
    G = float(np.sum(ax * np.minimum(ax, U)))
    l1 = float(ax.sum())
    lower = U * l1 / 2.0 if l1 >= ax.size * U / 2.0 else float(ax @ ax)
    return G, bool(G >= lower * (1.0 - 1e-12))


def norm_gap_inequality(x) -> bool:
    """Check ``||x||_2 - ||x||_1/sqrt(n) <= sqrt(n)/4 (max|x_i| - min|x_i|)``.

    Also checks the consequence ``||x||_2 <= ||x||_1/sqrt(n) + sqrt(n) ||x||_inf / 4``.
    A relative slack of 1e-12 absorbs rounding at the equality cases.
    """
    ax = np.abs(np.asarray(x, dtype=np.float64))
    n = ax.size
    if n == 0:
        return True
    rn = math.sqrt(n)
    l2 = float(np.sqrt(ax @ ax))
    l1 = float(ax.sum())
    tol = 1e-12 * max(l2, 1e-300)
    lemma = l2 - l1 / rn <= rn / 4.0 * (float(ax.max()) - float(ax.min())) + tol
    remark = l2 <= l1 / rn + rn * float(ax.max()) / 4.0 + tol
    return bool(lemma and remark)


def block_norm_inequality(h, k: int, c_bar: float) -> tuple[bool, bool]:
    """Blockwise consequence used for cone vectors.

    Sort ``|h|`` decreasingly and cut it into blocks ``S_0, S_1, ...`` of size
    ``k``. For ``h`` in the cone, ``sum_{i>=1} ||h_{S_i}||_2 <= (1/4 + 1/c_bar) ||h_{S_0}||_2``.
    Returns ``(in_cone, inequality_holds)``.
    """
    ax = np.sort(np.abs(np.asarray(h, dtype=np.float64)))[::-1]
    head = ax[:k]
    tail = ax[k:]
    in_cone = bool(head.sum() >= c_bar * tail.sum())
    blocks = [tail[i : i + k] for i in range(0, tail.size, k)]
    lhs = sum(float(np.linalg.norm(b)) for b in blocks)
    rhs = (0.25 + 1.0 / c_bar) * float(np.linalg.norm(head))
    return in_cone, bool(lhs <= rhs * (1.0 + 1e-12) + 1e-300)


def empirical_gap_probe(X, d, noise: NoiseModel, reps: int = 1000, seed: int = 0,
                        quantiles=(0.5, 0.9, 0.95, 0.99)):
    """Monte-Carlo mean of ``(||Xd + z||_1 - ||z||_1) / sqrt(n)`` and quantiles of its deviations.

    Returns ``(mean, deviation_quantiles, std_err)``.
    """
    if reps < 1000:
        raise ValueError("reps must be at least 1000")
    A = _as_values(X)
    n = A.shape[0]
    shift = A @ np.asarray(d, dtype=np.float64)
    Z = sample(noise, n * reps, seed).reshape(reps, n)
    vals = (np.abs(Z + shift).sum(axis=1) - np.abs(Z).sum(axis=1)) / math.sqrt(n)
    mean = float(vals.mean())
    dev = np.abs(vals - mean)
    se = float(vals.std(ddof=1) / math.sqrt(reps))
    return mean, np.quantile(dev, quantiles), se


def expected_gap_floor(X, d, a: float) -> float:
    """Lower bound on ``E(||Xd + z||_1 - ||z||_1) / sqrt(n)`` implied by the tail-scale condition."""
    A = _as_values(X)
    c = np.abs(A @ np.asarray(d, dtype=np.float64))
    return float(np.sum(a / 16.0 * c * np.minimum(c, 6.0 / a)) / math.sqrt(A.shape[0]))


def diagnose(X, k: int, c: float, lam: float, a: float, C2: float = 1.01, samples: int = 10_000,
             seed: int = 0, budget: int = BRUTE_FORCE_BUDGET) -> dict:
    """All design constants and the bound report as a JSON-ready dict."""
    A = _as_values(X)
    n, p = A.shape
    c_bar = (c - 1.0) / (c + 1.0)
    sb = sparse_eigen_bounds(A, k, budget=budget, seed=seed)
    re = restricted_eigenvalues(A, k, c_bar, samples=samples, seed=seed)
    re1 = restricted_eigenvalues(A, k, 1.0, samples=samples, seed=seed)
    rep = evaluate_theorem_bound(n, p, k, c, a, C2, sb, re, lam)
    out = {
        "n": n, "p": p, "k": k, "lambda": lam,
        "sparse_eigenvalues": {"lambda_u": sb.lambda_u, "lambda_l": sb.lambda_l,
                               "method": sb.method.value, "samples": sb.samples},
        "restricted_eigenvalues": {
            "c_bar": re.c_bar, "kappa_l": re.kappa_l, "kappa_u": re.kappa_u,
            "eta_l": re.eta_l, "eta_u": re.eta_u, "method": re.method.value,
            "samples": re.samples, "minima": "optimistic",
        },
        "restricted_eigenvalues_cbar1": {"kappa_l": re1.kappa_l, "eta_l": re1.eta_l, "minima": "optimistic"},
        "theorem_bound": {
            "c": rep.c, "c_bar": rep.c_bar, "a": rep.a, "C1": rep.C1, "C2": rep.C2,
            "condition_I_holds": rep.condition_I_holds, "error_bound": rep.error_bound,
            "probability_floor": rep.probability_floor,
            "noiseless_condition": noiseless_recovery_condition(lam, n, re1),
        },
    }
    return out


__all__ = [
    "RestrictedEigenvalues",
    "SparseEigenBounds",
    "TheoremBoundReport",
    "block_norm_inequality",
    "diagnose",
    "empirical_gap_probe",
    "evaluate_theorem_bound",
    "g_function",
    "noiseless_recovery_condition",
    "norm_gap_inequality",
    "restricted_eigenvalues",
    "sparse_eigen_bounds",
]
