import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import gaussian_design
from plad.core import normalize_columns
from plad.penalty import (
    DomainError,
    InadmissiblePenalty,
    PenaltyRule,
    PenaltySpec,
    ScreeningWarning,
    a_of_alpha,
    default_penalty,
    empirical_quantile,
    inverse_normal_cdf,
    mc_quantile_penalty,
    moment_condition,
    normal_cdf,
    penalty_asymptotic,
    penalty_refined,
    penalty_simple,
    rademacher_sup_norms,
    resolve_penalty,
    screening_check,
)

# frozen from 40-digit mpmath evaluations of the closed forms
A_01_400 = 1.5
ASYMPTOTIC_200_400 = 68.44915263603640
SIMPLE_200_400 = 69.23273530409141
REFINED_200_400 = 54.25074448782388
QUANTILE_0975 = 1.959963984540054


def test_a_of_alpha():
    assert a_of_alpha(2 / 400, 400) == pytest.approx(2.0, abs=1e-14)
    assert a_of_alpha(2.0, 400) == 1.0
    assert a_of_alpha(0.1, 400) == pytest.approx(A_01_400, abs=1e-12)
    with pytest.raises(ValueError):
        a_of_alpha(0.1, 1)


def test_asymptotic():
    assert penalty_asymptotic(200, 400, 1.0, 2 / 400) == pytest.approx(penalty_simple(200, 400, 1.0), rel=1e-14)
    assert penalty_asymptotic(200, 400, 1.1, 0.05) == pytest.approx(ASYMPTOTIC_200_400, rel=1e-13)
    assert penalty_asymptotic(400, 400, 1.1, 0.05) / penalty_asymptotic(200, 400, 1.1, 0.05) == pytest.approx(
        math.sqrt(2), rel=1e-14)


def test_simple():
    assert penalty_simple(200, 400, 1.0) == pytest.approx(SIMPLE_200_400, rel=1e-13)
    assert penalty_simple(1, math.e, 1.0) == pytest.approx(2.0, rel=1e-15)
    assert penalty_simple(800, 400) == pytest.approx(2 * penalty_simple(200, 400), rel=1e-14)
    with pytest.raises(ValueError):
        penalty_simple(10, 10, 0.9)
    assert default_penalty(200, 400) == pytest.approx(math.sqrt(2) * SIMPLE_200_400 / 2, rel=1e-14)


def test_refined():
    lam, mc = penalty_refined(200, 400, 1.0, 400.0, 4.0)
    assert lam == 0.0
    lam, mc = penalty_refined(200, 400, 1.0, 0.05, 4.0)
    assert lam == pytest.approx(REFINED_200_400, rel=1e-10)
    assert mc.admissible
    assert lam < penalty_simple(200, 400, 1.0)
    with pytest.raises(ValueError):
        penalty_refined(200, 400, 1.0, 0.05, 2.0)


def test_refined_inadmissible_warns():
    with pytest.warns(InadmissiblePenalty):
        _, mc = penalty_refined(200, 400, 1.1, 0.05, 3.0)
    assert not mc.admissible


def test_moment_condition_bruteforce():
    X = gaussian_design(30, 12, 1)
    for q in (2.0, 3.0, 4.5):
        mc = moment_condition(X, q, 0.05)
        scan = max(sum(abs(X.values[i, j]) ** q for i in range(30)) / 30 for j in range(12))
        assert mc.B == pytest.approx(scan, rel=1e-12)
        assert mc.B >= 1 - 1e-12


def test_inverse_normal_examples():
    assert inverse_normal_cdf(0.5) == 0.0
    assert inverse_normal_cdf(0.975) == pytest.approx(QUANTILE_0975, abs=1e-10)
    for u in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            inverse_normal_cdf(u)


def test_inverse_normal_against_bisection():
    for u in (1e-300, 1e-12, 1e-6, 0.02425, 0.1, 0.3, 0.6, 0.97575, 1 - 1e-9, 1 - 0.05 / 800):
        assert inverse_normal_cdf(u) == pytest.approx(oracles.normal_quantile(u), abs=1e-10)


def test_inverse_normal_roundtrip_grid():
    us = np.concatenate([np.geomspace(1e-12, 0.5, 5000), 1 - np.geomspace(1e-12, 0.5, 5000)[::-1]])
    err = max(abs(normal_cdf(inverse_normal_cdf(u)) - u) for u in us)
    assert err <= 1e-9


def test_mc_identity_and_bound():
    n = 16
    I = normalize_columns(np.eye(n))
    for a in (0.01, 0.2, 0.9):
        assert mc_quantile_penalty(I, 1.1, a, 200, 3) == pytest.approx(1.1 * 4.0)
    X = gaussian_design(20, 30, 2)
    assert mc_quantile_penalty(X, 1.3, 0.05, 500, 0) <= 1.3 * X.col_l1().max()
    with pytest.raises(ValueError):
        mc_quantile_penalty(X, reps=99)


def test_mc_deterministic_and_prefix_stable():
    X = gaussian_design(20, 30, 3)
    a = rademacher_sup_norms(X, 700, 5)
    b = rademacher_sup_norms(X, 700, 5)
    c = rademacher_sup_norms(X, 300, 5)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[:300], c)
    assert mc_quantile_penalty(X, 1.1, 0.05, 700, 5) == mc_quantile_penalty(X, 1.1, 0.05, 700, 5)


def test_empirical_quantile_order_statistic():
    v = np.arange(1.0, 101.0)[::-1]
    assert empirical_quantile(v, 0.05) == 95.0  # ceil(95) -> 95th smallest
    assert empirical_quantile(v, 0.055) == 95.0  # ceil(94.5)
    assert empirical_quantile(np.arange(1.0, 11.0), 0.01) == 10.0


def test_mc_quantile_vs_exact_enumeration():
    # n = 12 gives 4096 sign vectors, the exact law of ||S||_inf
    X = gaussian_design(12, 5, 4)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=12)))
    exact = np.sort(np.max(np.abs(signs @ X.values), axis=1))
    q_exact = exact[math.ceil(0.9 * exact.size) - 1]
    draws = rademacher_sup_norms(X, 20000, 9)
    # the MC quantile lands between neighbouring exact quantiles
    lo = exact[math.ceil(0.88 * exact.size) - 1]
    hi = exact[math.ceil(0.92 * exact.size) - 1]
    assert lo <= empirical_quantile(draws, 0.1) <= hi
    assert abs(np.mean(draws > q_exact) - np.mean(exact > q_exact)) < 0.01


def test_mc_coverage_fresh_draws():
    X = gaussian_design(100, 200, 5)
    lam = mc_quantile_penalty(X, 1.1, 0.05, 2000, 11)
    fresh = rademacher_sup_norms(X, 2000, 12345)
    assert np.mean(lam >= 1.1 * fresh) >= 0.94


def test_screening():
    X = gaussian_design(20, 10, 6)
    assert screening_check(X, 0.0) == set()
    with pytest.warns(ScreeningWarning):
        dead = screening_check(X, X.col_l1().max() + 1)
    assert dead == set(range(10))
    big = gaussian_design(200, 400, 7)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ScreeningWarning)
        assert screening_check(big, default_penalty(200, 400)) == set()
    assert np.median(big.col_l1()) == pytest.approx(200 * math.sqrt(2 / math.pi), rel=0.02)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0001, 3), st.floats(1.0001, 3), st.floats(0.001, 0.99), st.floats(0.001, 0.99))
def test_monotone_in_c_and_alpha(c1, c2, a1, a2):
    c_lo, c_hi = sorted((c1, c2))
    a_lo, a_hi = sorted((a1, a2))
    n, p = 150, 300
    assert penalty_asymptotic(n, p, c_lo, a_lo) <= penalty_asymptotic(n, p, c_hi, a_lo)
    assert penalty_asymptotic(n, p, c_lo, a_lo) >= penalty_asymptotic(n, p, c_lo, a_hi)
    assert penalty_simple(n, p, c_lo) <= penalty_simple(n, p, c_hi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InadmissiblePenalty)
        r = lambda c, a: penalty_refined(n, p, c, a, 4.0)[0]
        assert r(c_lo, a_lo) <= r(c_hi, a_lo)
        assert r(c_lo, a_lo) >= r(c_lo, a_hi)
    if a_hi > a_lo * (1 + 1e-6):
        assert penalty_asymptotic(n, p, c_lo, a_lo) > penalty_asymptotic(n, p, c_lo, a_hi)


def test_mc_monotone_in_alpha_and_c():
    X = gaussian_design(30, 40, 8)
    vals = [mc_quantile_penalty(X, 1.1, a, 400, 2) for a in (0.01, 0.05, 0.2, 0.5)]
    assert vals == sorted(vals, reverse=True)
    assert mc_quantile_penalty(X, 1.2, 0.05, 400, 2) > mc_quantile_penalty(X, 1.1, 0.05, 400, 2)


def test_penalty_spec_invariants():
    with pytest.raises(ValueError):
        PenaltySpec(PenaltyRule.SIMPLE, c=1.0)
    with pytest.raises(ValueError):
        PenaltySpec(PenaltyRule.ASYMPTOTIC, alpha=1.0)
    with pytest.raises(ValueError):
        PenaltySpec(PenaltyRule.FIXED)
    with pytest.raises(ValueError):
        PenaltySpec(PenaltyRule.SIMPLE, fixed_value=3.0)
    assert PenaltySpec("mc").rule is PenaltyRule.MC


def test_resolve_every_rule():
    X = gaussian_design(200, 400, 9)
    expect = {
        "asymptotic": penalty_asymptotic(200, 400, 1.1, 0.05),
        "simple": penalty_simple(200, 400, 1.1),
        "refined": 1.1 * REFINED_200_400,
    }
    for rule, val in expect.items():
        lam, info = resolve_penalty(PenaltySpec(rule), X)
        assert lam == pytest.approx(val, rel=1e-9)
        assert info["dead_columns"] == 0 and info["lambda"] == lam
    lam, info = resolve_penalty(PenaltySpec("mc", mc_reps=200, seed=1), X)
    assert lam == mc_quantile_penalty(X, 1.1, 0.05, 200, 1)
    lam, _ = resolve_penalty(PenaltySpec("fixed", fixed_value=12.5), X)
    assert lam == 12.5
