import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import linalg

from conftest import gaussian_design
from plad import noise
from plad.core import in_restricted_set, normalize_columns
from plad.diagnostics import (
    Method,
    NonpositiveEta,
    RestrictedEigenvalues,
    SparseEigenBounds,
    _cone_samples,
    _rng,
    block_norm_inequality,
    diagnose,
    empirical_gap_probe,
    evaluate_theorem_bound,
    expected_gap_floor,
    g_function,
    noiseless_recovery_condition,
    norm_gap_inequality,
    restricted_eigenvalues,
    sparse_eigen_bounds,
)

# 40-digit evaluation of the closed form at n=200, p=400, k=5, c=1.1, a=1,
# C2=1.01, eta_l=1, lambda_u=200
DESK_BOUND = 27086.16496968496


def _scan(X, k):
    """Independent subset scan with scipy's symmetric eigensolver."""
    A = np.asarray(X)
    lo, hi = np.inf, -np.inf
    for S in itertools.combinations(range(A.shape[1]), k):
        ev = linalg.eigh(A[:, S].T @ A[:, S], eigvals_only=True)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return lo, hi


def test_identity_sparse_eigen():
    n = 8
    I = normalize_columns(np.eye(n)).values
    for k in (1, 2, 3):
        b = sparse_eigen_bounds(I, k)
        assert b.lambda_l == pytest.approx(n) and b.lambda_u == pytest.approx(n)
        assert b.method is Method.BRUTE_FORCE


def test_k1_equals_n():
    X = gaussian_design(15, 30, 1)
    b = sparse_eigen_bounds(X, 1)
    assert b.lambda_l == pytest.approx(15, rel=1e-12) and b.lambda_u == pytest.approx(15, rel=1e-12)


def test_bruteforce_6x6_pairs():
    X = gaussian_design(6, 6, 2)
    b = sparse_eigen_bounds(X, 2)
    lo, hi = _scan(X.values, 2)
    assert b.samples == 15
    assert b.lambda_l == pytest.approx(lo, abs=1e-9) and b.lambda_u == pytest.approx(hi, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.integers(3, 12), st.integers(1, 3), st.integers(0, 2**31))
def test_bruteforce_matches_scan(n, p, k, seed):
    k = min(k, n, p)
    X = gaussian_design(n, p, seed)
    b = sparse_eigen_bounds(X, k)
    lo, hi = _scan(X.values, k)
    assert b.method is Method.BRUTE_FORCE
    assert abs(b.lambda_l - lo) <= 1e-9 and abs(b.lambda_u - hi) <= 1e-9
    assert 0 <= b.lambda_l + 1e-9 and b.lambda_l <= b.lambda_u


def test_monte_carlo_branch_inside_exact_range():
    X = gaussian_design(20, 12, 3)
    exact = sparse_eigen_bounds(X, 3)
    mc = sparse_eigen_bounds(X, 3, budget=50, seed=4)
    assert mc.method is Method.MONTE_CARLO and mc.samples == 51
    assert exact.lambda_l - 1e-9 <= mc.lambda_l <= mc.lambda_u <= exact.lambda_u + 1e-9
    assert mc == sparse_eigen_bounds(X, 3, budget=50, seed=4)
    with pytest.raises(ValueError):
        sparse_eigen_bounds(X, 13)


def test_identity_restricted_eigenvalues():
    n = 16
    I = normalize_columns(np.eye(n)).values
    re = restricted_eigenvalues(I, 2, 1 / 21, samples=20_000, seed=0)
    assert re.eta_l >= 1 - 1e-12 and re.eta_l <= 1.05
    assert re.kappa_l >= 1 / math.sqrt(n) - 1e-12 and re.kappa_l <= 1.05 / math.sqrt(n)
    assert re.optimistic


def test_cone_samples_in_cone():
    for c_bar in (1 / 21, 0.5, 1.0):
        H, on = _cone_samples(_rng(3, 0), 500, 30, 4, c_bar)
        for h in H:
            assert in_restricted_set(h, 4, c_bar)[0]


def test_ratios_scale_invariant():
    X = gaussian_design(20, 30, 5).values
    H, on = _cone_samples(_rng(1, 0), 200, 30, 3, 0.3)
    for t in (1e-3, 7.0):
        r1 = np.abs(H @ X.T).sum(axis=1) / on
        rt = np.abs((t * H) @ X.T).sum(axis=1) / (t * on)
        np.testing.assert_allclose(r1, rt, rtol=1e-12)


def test_restricted_monotone_refinement_and_determinism():
    X = gaussian_design(30, 50, 6)
    a = restricted_eigenvalues(X, 3, 0.2, samples=1000, seed=9)
    b = restricted_eigenvalues(X, 3, 0.2, samples=5000, seed=9)
    assert b.kappa_l <= a.kappa_l and b.eta_l <= a.eta_l
    assert b.kappa_u >= a.kappa_u and b.eta_u >= a.eta_u
    assert a == restricted_eigenvalues(X, 3, 0.2, samples=1000, seed=9)
    assert a.kappa_l <= a.kappa_u and a.eta_l <= a.eta_u
    with pytest.raises(ValueError):
        restricted_eigenvalues(X, 3, 0.2, samples=999)


def _inputs(eta_l=1.0, lambda_u=200.0, kappa_l=1.0):
    sb = SparseEigenBounds(5, lambda_u, 100.0, Method.MONTE_CARLO, 1)
    re = RestrictedEigenvalues(5, 1 / 21, kappa_l, 2.0, eta_l, 2.0, 1000)
    return sb, re


def test_theorem_bound_closed_form():
    sb, re = _inputs()
    rep = evaluate_theorem_bound(200, 400, 5, 1.1, 1.0, 1.01, sb, re, math.sqrt(2 * 200 * math.log(400)))
    assert rep.C1 == pytest.approx(29.56711395993652, rel=1e-13)
    assert rep.error_bound == pytest.approx(DESK_BOUND, rel=1e-12)
    assert rep.probability_floor == pytest.approx(1 - 2 * 400 ** (-4 * 5 * (1.01**2 - 1) + 1), rel=1e-14)
    half = evaluate_theorem_bound(200, 400, 5, 1.1, 2.0, 1.01, sb, re, 10.0)
    assert half.error_bound == pytest.approx(rep.error_bound / 2, rel=1e-14)
    again = evaluate_theorem_bound(200, 400, 5, 1.1, 1.0, 1.01, *_inputs(), math.sqrt(2 * 200 * math.log(400)))
    assert again == rep


def test_theorem_bound_k_to_zero():
    sb, re = _inputs()
    vals = [evaluate_theorem_bound(200, 400, k, 1.1, 1.0, 1.01, sb, re, 10.0).error_bound for k in (5, 1)]
    assert vals[1] == pytest.approx(vals[0] / math.sqrt(5), rel=1e-13)


def test_condition_I():
    sb, re = _inputs(lambda_u=1.0, kappa_l=1.0)
    # lhs = 3 sqrt(n)/16; make n huge so it dominates
    rep = evaluate_theorem_bound(10**9, 400, 5, 3.0, 1.0, 1.01, sb, re, 0.0)
    assert rep.condition_I_holds
    rep = evaluate_theorem_bound(200, 400, 5, 1.1, 1.0, 1.01, sb, re, 10.0)
    assert not rep.condition_I_holds


def test_theorem_bound_errors():
    sb, re = _inputs(eta_l=0.0)
    with pytest.raises(NonpositiveEta):
        evaluate_theorem_bound(200, 400, 5, 1.1, 1.0, 1.01, sb, re, 10.0)
    sb, re = _inputs()
    with pytest.raises(ValueError):
        evaluate_theorem_bound(200, 400, 5, 1.1, 1.0, 1.0, sb, re, 10.0)
    with pytest.raises(ValueError):
        evaluate_theorem_bound(200, 400, 5, 1.1, 0.0, 1.01, sb, re, 10.0)


def test_noiseless_condition():
    n = 16
    re1 = RestrictedEigenvalues(2, 1.0, 1 / math.sqrt(n), 1.0, 1.0, 1.0, 1000)
    assert noiseless_recovery_condition(0.0, n, re1)
    assert not noiseless_recovery_condition(2 * math.sqrt(n * math.log(n)), n, re1)
    X = gaussian_design(100, 200, 7)
    re = restricted_eigenvalues(X, 3, 1.0, samples=10_000, seed=0)
    assert noiseless_recovery_condition(2 * math.sqrt(100 * math.log(200)), 100, re)
    with pytest.raises(ValueError):
        noiseless_recovery_condition(1.0, n, RestrictedEigenvalues(2, 0.5, 1, 1, 1, 1, 1000))


def test_g_function_examples():
    assert g_function(np.zeros(4), 1.0) == (0.0, True)
    G, ok = g_function([1.0, 3.0], 2.0)
    assert G == 7.0 and ok
    with pytest.raises(ValueError):
        g_function([1.0], 0.0)


def test_g_function_first_case_random():
    rng = np.random.default_rng(8)
    seen = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 30))
        U = float(rng.exponential(3.0)) + 1e-9
        x = rng.standard_cauchy(n) * U * rng.choice([0.5, 1, 10])
        if np.abs(x).sum() >= n * U / 2:
            seen += 1
            assert g_function(x, U)[1]
    assert seen > 1000


def test_g_function_second_case_bounded_entries():
    # with every |x_i| <= U, G(x) = ||x||_2^2 exactly
    rng = np.random.default_rng(18)
    for _ in range(10_000):
        n = int(rng.integers(1, 30))
        U = float(rng.exponential(3.0)) + 1e-9
        x = rng.uniform(-U, U, n) * rng.uniform(0, 1)
        G, ok = g_function(x, U)
        assert ok and G == pytest.approx(x @ x, rel=1e-12)


def test_g_function_second_case_counterexample():
    # ||x||_1 = 1.4 U < 3U/2 but G = 1.4 U^2 < ||x||_2^2 = 1.96 U^2: the
    # stated bound fails, the predicate reports it
    G, ok = g_function([1.4, 0.0, 0.0], 1.0)
    assert G == pytest.approx(1.4) and not ok
    assert G >= 1.4**2 / 3  # the bound ||x||_1^2 / n does hold here


def test_norm_gap_examples():
    assert norm_gap_inequality(np.full(5, 2.5))
    assert norm_gap_inequality([1.0, 0, 0, 0])  # equality edge of the remark
    x = np.array([1.0, 0, 0, 0])
    assert np.linalg.norm(x) == pytest.approx(np.abs(x).sum() / 2 + 2 * 1 / 4)


def test_norm_gap_random():
    rng = np.random.default_rng(9)
    for _ in range(10_000):
        n = int(rng.integers(1, 40))
        x = np.sort(rng.exponential(1.0, n) ** rng.uniform(0.2, 4))[::-1]
        assert norm_gap_inequality(x)
        assert norm_gap_inequality(x * rng.choice([-1.0, 1.0], n))


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_norm_gap_property(x):
    assert norm_gap_inequality(x)


def test_block_norm_inequality_on_cone():
    for c_bar in (1 / 21, 0.3, 1.0):
        H, _ = _cone_samples(_rng(5, 1), 1000, 40, 4, c_bar)
        for h in H:
            in_cone, holds = block_norm_inequality(h, 4, c_bar)
            assert in_cone and holds


def test_gap_probe_zero_and_symmetry():
    X = gaussian_design(30, 10, 10)
    m, q, se = empirical_gap_probe(X, np.zeros(10), noise.cauchy(), 1000, 1)
    assert m == 0.0 and not q.any()
    d = np.zeros(10)
    d[0] = 0.2
    m1, _, s1 = empirical_gap_probe(X, d, noise.gaussian(), 4000, 2)
    m2, _, s2 = empirical_gap_probe(X, -d, noise.gaussian(), 4000, 3)
    assert abs(m1 - m2) <= 4 * math.hypot(s1, s2)
    with pytest.raises(ValueError):
        empirical_gap_probe(X, d, noise.gaussian(), 999)


def test_gap_probe_respects_floor():
    X = gaussian_design(50, 20, 11)
    a = noise.certify_scale_parameter(noise.gaussian())
    for scale in (0.01, 0.1, 0.5):
        d = np.zeros(20)
        d[:3] = scale
        m, _, se = empirical_gap_probe(X, d, noise.gaussian(), 5000, 4)
        assert m >= expected_gap_floor(X, d, a) - 3 * se


def test_diagnose_report_shape():
    X = gaussian_design(20, 15, 12)
    out = diagnose(X, 2, 1.1, 5.0, 1.0, samples=1000)
    assert out["sparse_eigenvalues"]["method"] == "BruteForce"
    assert out["restricted_eigenvalues"]["minima"] == "optimistic"
    assert set(out["theorem_bound"]) >= {"C1", "error_bound", "condition_I_holds", "noiseless_condition"}
