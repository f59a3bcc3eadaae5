"""Error distributions for the simulation study and the tail-scale condition.

All families have median zero. The scale condition asks for ``a > 0`` with::

    P(z >= x) <= 1 / (2 + a x)      for x >= 0
    P(z <= x) <= 1 / (2 + a |x|)    for x < 0

:func:`certify_scale_parameter` returns the largest such ``a`` for a model.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr

LN2 = math.log(2.0)
_HETERO_UPPER = 3.0


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    T2 = "t2"
    CAUCHY = "cauchy"
    EXP = "exp"  # Exp(1) shifted by -log 2, scaled
    HETERO_GAUSSIAN = "hetero_gaussian"
    HETERO_T2 = "hetero_t2"
    HETERO_MIXTURE = "hetero_mixture"


class NumericalFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Noise family with its scale.

    ``scale`` is sigma for the Gaussian and the multiplier of the standard
    variate for the other homoscedastic families. Heteroscedastic families
    draw an independent per-observation scale from ``U(0, upper)``.
    """

    family: Family
    scale: float = 1.0
    upper: float = _HETERO_UPPER
    seed: int = 0
    certified_a: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.scale < 0 or self.upper <= 0:
            raise ValueError("scales must be nonnegative")

    @property
    def heteroscedastic(self) -> bool:
        return self.family in (Family.HETERO_GAUSSIAN, Family.HETERO_T2, Family.HETERO_MIXTURE)

    def to_dict(self) -> dict:
        params = {"upper": self.upper} if self.heteroscedastic else {"scale": self.scale}
        return {"family": self.family.value, "params": params, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        params = dict(d.get("params", {}))
        if "sigma" in params:
            params["scale"] = params.pop("sigma")
        return cls(family=Family(d["family"]), seed=int(d.get("seed", 0)), **params)

    def label(self) -> str:
        names = {
            Family.GAUSSIAN: f"N(0,{self.scale:g}^2)",
            Family.T2: "t(2)" if self.scale == 1 else f"{self.scale:g}*t(2)",
            Family.CAUCHY: "Cauchy" if self.scale == 1 else f"{self.scale:g}*Cauchy",
            Family.EXP: "Exp(1)-log2",
            Family.HETERO_GAUSSIAN: "case (a)",
            Family.HETERO_T2: "case (b)",
            Family.HETERO_MIXTURE: "case (c)",
        }
        return names[self.family]


def gaussian(sigma: float = 1.0, seed: int = 0) -> NoiseModel:
    return NoiseModel(Family.GAUSSIAN, scale=sigma, seed=seed)


def t2(scale: float = 1.0, seed: int = 0) -> NoiseModel:
    return NoiseModel(Family.T2, scale=scale, seed=seed)


def cauchy(scale: float = 1.0, seed: int = 0) -> NoiseModel:
    return NoiseModel(Family.CAUCHY, scale=scale, seed=seed)


# ---------------------------------------------------------------------------
# sampling


def _streams(seed):
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    base, scales, comps = ss.spawn(3)
    return (np.random.Generator(np.random.PCG64(base)),
            np.random.Generator(np.random.PCG64(scales)),
            np.random.Generator(np.random.PCG64(comps)))


def _std_t2(rng, n):
    # N(0,1) / sqrt(chi2_2 / 2); chi2_2 / 2 is Exp(1)
    return rng.standard_normal(n) / np.sqrt(rng.standard_exponential(n))


def sample(model: NoiseModel, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` errors; ``seed`` defaults to ``model.seed``.

    The base variates, the per-observation scales and the mixture component
    labels come from three independent sub-streams of the seed.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rb, rs, rc = _streams(model.seed if seed is None else seed)
    f = model.family
    if f is Family.GAUSSIAN:
        return model.scale * rb.standard_normal(n)
    if f is Family.T2:
        return model.scale * _std_t2(rb, n)
    if f is Family.CAUCHY:
        return model.scale * rb.standard_cauchy(n)
    if f is Family.EXP:
        return model.scale * (rb.standard_exponential(n) - LN2)
    s = rs.uniform(0.0, model.upper, n)
    if f is Family.HETERO_GAUSSIAN:
        return s * rb.standard_normal(n)
    if f is Family.HETERO_T2:
        return s * _std_t2(rb, n)
    # mixture: one uniform per observation picks the component
    g = rb.standard_normal(n)
    t = _std_t2(rb, n)
    e = rb.standard_exponential(n) - LN2
    u = rc.uniform(size=n)
    base = np.where(u < 1 / 3, g, np.where(u < 2 / 3, t, e))
    return s * base


# ---------------------------------------------------------------------------
# distribution functions of the standardized families


def _cdf_std(kind: Family, x):
    x = np.asarray(x, dtype=np.float64)
    if kind is Family.GAUSSIAN:
        return ndtr(x)
    if kind is Family.T2:
        return 0.5 + x / (2.0 * np.sqrt(2.0 + x * x))
    if kind is Family.CAUCHY:
        return 0.5 + np.arctan(x) / math.pi
    if kind is Family.EXP:
        with np.errstate(over="ignore"):
            return np.where(x >= -LN2, -np.expm1(-(x + LN2)), 0.0)
    raise ValueError(kind)


def _sf_std(kind: Family, x):
    """Upper tail ``P(Z >= x)`` computed without cancellation."""
    x = np.asarray(x, dtype=np.float64)
    if kind is Family.GAUSSIAN:
        return ndtr(-x)
    if kind is Family.T2:
        r = np.sqrt(2.0 + x * x)
        return np.where(x >= 0, 1.0 / (r * (r + np.abs(x))), 1.0 - 1.0 / (r * (r + np.abs(x))))
    if kind is Family.CAUCHY:
        return np.arctan2(1.0, x) / math.pi
    if kind is Family.EXP:
        with np.errstate(over="ignore"):
            return np.where(x >= -LN2, 0.5 * np.exp(-x), 1.0)
    raise ValueError(kind)


_DENSITY0 = {
    Family.GAUSSIAN: 1.0 / math.sqrt(2.0 * math.pi),
    Family.T2: 1.0 / (2.0 * math.sqrt(2.0)),
    Family.CAUCHY: 1.0 / math.pi,
    Family.EXP: 0.5,
}

_HETERO_BASE = {
    Family.HETERO_GAUSSIAN: (Family.GAUSSIAN,),
    Family.HETERO_T2: (Family.T2,),
    Family.HETERO_MIXTURE: (Family.GAUSSIAN, Family.T2, Family.EXP),
}


def _scale_mixture(fn, kinds, upper, x):
    """Average of ``fn(kind, x / s)`` over kinds and ``s ~ U(0, upper)``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))

    def integrand(s):
        s = max(s, 1e-300)
        return np.mean([fn(k, x / s) for k in kinds], axis=0)

    val, _ = integrate.quad_vec(integrand, 0.0, upper, epsabs=1e-15, epsrel=1e-12, limit=400)
    return val / upper


def cdf(model: NoiseModel, x):
    """``P(z <= x)``."""
    if model.heteroscedastic:
        return _scale_mixture(_cdf_std, _HETERO_BASE[model.family], model.upper, x)
    x = np.asarray(x, dtype=np.float64)
    if model.scale == 0:
        return np.where(x >= 0, 1.0, 0.0)
    return _cdf_std(model.family, x / model.scale)


def sf(model: NoiseModel, x):
    """``P(z >= x)`` (all families are continuous, so ``>=`` and ``>`` agree)."""
    if model.heteroscedastic:
        return _scale_mixture(_sf_std, _HETERO_BASE[model.family], model.upper, x)
    x = np.asarray(x, dtype=np.float64)
    if model.scale == 0:
        return np.where(x <= 0, 1.0, 0.0)
    return _sf_std(model.family, x / model.scale)


def density_at_zero(model: NoiseModel) -> float:
    if model.heteroscedastic or model.scale == 0:
        return math.inf
    return _DENSITY0[model.family] / model.scale


# ---------------------------------------------------------------------------
# scale condition


def _tail_ratio(model: NoiseModel, x):
    """``min((1/P(z>=x) - 2)/x, (1/P(z<=-x) - 2)/x)`` for ``x > 0``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    up = np.asarray(sf(model, x), dtype=np.float64)
    lo = np.asarray(cdf(model, -x), dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        ru = np.where(up > 0, (1.0 / up - 2.0) / x, np.inf)
        rl = np.where(lo > 0, (1.0 / lo - 2.0) / x, np.inf)
    return np.minimum(ru, rl)


def certify_scale_parameter(model: NoiseModel, grid: int = 2048) -> float:
    """Largest ``a`` satisfying the two-sided tail bound for ``model``.

    The infimum of the tail ratio is taken over ``grid`` log-spaced points in
    ``[1e-6, 1e6]`` together with its ``x -> 0`` limit ``4 f(0)``, then
    refined by golden-section search around the best grid point. Points where
    a tail probability underflows to 0 satisfy the bound trivially. Returns 0
    when the bound fails somewhere (e.g. the median is not 0) and ``inf`` for
    the degenerate zero-noise model.
    """
    if not model.heteroscedastic and model.scale == 0:
        return math.inf
    xs = np.logspace(-6, 6, grid)
    ratios = _tail_ratio(model, xs)
    if np.any(np.isnan(ratios)):
        raise NumericalFailure("tail probability evaluation returned NaN")
    if np.any(ratios <= 0):
        return 0.0
    i = int(np.argmin(ratios))
    best = float(ratios[i])
    if 0 < i < grid - 1:
        lo, hi = math.log(xs[i - 1]), math.log(xs[i + 1])
        res = optimize.minimize_scalar(
            lambda t: float(_tail_ratio(model, math.exp(t))[0]),
            bracket=(lo, math.log(xs[i]), hi),
            method="golden",
        )
        if lo <= res.x <= hi:
            best = min(best, float(res.fun))
    return float(min(best, 4.0 * density_at_zero(model)))


def satisfies_scale_condition(model: NoiseModel, a: float, grid: int = 2048) -> bool:
    """Check the tail bound for a given ``a`` on the certification grid."""
    xs = np.logspace(-6, 6, grid)
    up = np.asarray(sf(model, xs))
    lo = np.asarray(cdf(model, -xs))
    bound = 1.0 / (2.0 + a * xs)
    slack = 1e-12
    return bool(np.all(up <= bound * (1 + slack)) and np.all(lo <= bound * (1 + slack)))


# ---------------------------------------------------------------------------
# numeric checks of the expected absolute-loss gap


def derivative_identity_check(model: NoiseModel, x_grid, mc_reps: int = 10**6, seed: int = 0,
                              step: float = 0.01) -> float:
    """Max discrepancy between ``d/dx E(|z+x| - |z|)`` and ``1 - 2 P(z <= -x)``.

    The derivative is a central difference of Monte-Carlo means that share
    the same draws at ``x - step`` and ``x + step``.
    """
    if mc_reps < 10**5:
        raise ValueError("mc_reps must be at least 1e5")
    z = sample(model, mc_reps, seed)
    worst = 0.0
    for x in np.atleast_1d(np.asarray(x_grid, dtype=np.float64)):
        fd = np.mean(np.abs(z + x + step) - np.abs(z + x - step)) / (2.0 * step)
        exact = 1.0 - 2.0 * float(np.asarray(cdf(model, -x)).ravel()[0])
        worst = max(worst, abs(fd - exact))
    return float(worst)


def expected_gap_rows(model: NoiseModel, a: float, c_grid, mc_reps: int = 10**6, seed: int = 0):
    """Per-``c`` rows ``(c, mc_mean, std_err, lower_bound)``."""
    z = sample(model, mc_reps, seed)
    rows = []
    for c in np.atleast_1d(np.asarray(c_grid, dtype=np.float64)):
        v = np.abs(z + c) - np.abs(z)
        mean = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(v.size))
        rhs = a / 16.0 * abs(c) * min(abs(c), 6.0 / a) if a > 0 else 0.0
        rows.append((float(c), mean, se, rhs))
    return rows


def expected_gap_lower_bound_check(model: NoiseModel, a: float, c_grid, mc_reps: int = 10**6,
                                   seed: int = 0) -> bool:
    """``E(|z+c| - |z|) >= (a/16)|c| min(|c|, 6/a)`` up to 3 Monte-Carlo standard errors."""
    return all(mean >= rhs - 3.0 * se for _, mean, se, rhs in expected_gap_rows(model, a, c_grid, mc_reps, seed))
