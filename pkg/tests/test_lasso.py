import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import gaussian_design
from plad import _kernels
from plad._cd_py import cd_sweeps as cd_python
from plad.core import normalize_columns
from plad.lasso import (
    SweepLimit,
    fit_lasso,
    lasso_base_penalty,
    lasso_kkt_gap,
    lasso_objective,
    lasso_penalty_known_sigma,
)

KKT_TOL = 1e-6


def test_shutoff():
    X = gaussian_design(30, 50, 1)
    y = np.random.default_rng(1).standard_normal(30)
    lam = np.max(np.abs(X.values.T @ y))
    fit = fit_lasso(X, y, lam)
    assert not fit.beta.any()
    assert fit.kkt_gap <= KKT_TOL


def test_orthogonal_closed_form():
    n = 9
    X = normalize_columns(np.eye(n))
    y = np.random.default_rng(2).standard_normal(n) * 5
    lam = 4.0
    u = y * math.sqrt(n)
    expect = np.sign(u) * np.maximum(np.abs(u) - lam, 0) / n
    np.testing.assert_allclose(fit_lasso(X, y, lam).beta, expect, atol=1e-10)


def test_correlated_pair_grid():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(40)
    X = normalize_columns(np.column_stack([a, a + 0.3 * rng.standard_normal(40)]))
    y = X.values @ [1.0, 0.5] + rng.standard_normal(40)
    lam = 5.0
    fit = fit_lasso(X, y, lam)
    g = np.linspace(-1, 1, 201)
    B = fit.beta + np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    objs = 0.5 * np.sum((y[None] - B @ X.values.T) ** 2, axis=1) + lam * np.abs(B).sum(axis=1)
    assert objs.min() >= fit.objective - 1e-9


def test_matches_convex_solver():
    for seed in range(4):
        X = gaussian_design(50, 80, 10 + seed)
        rng = np.random.default_rng(seed)
        y = X.values[:, :3] @ [3.0, -2.0, 1.0] + rng.standard_normal(50)
        lam = 8.0
        fit = fit_lasso(X, y, lam)
        np.testing.assert_allclose(fit.beta, oracles.lasso_solution(X.values, y, lam), atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(1, 60), st.floats(0.01, 50), st.integers(0, 2**31))
def test_kkt_certificate(n, p, lam, seed):
    rng = np.random.default_rng(seed)
    X = normalize_columns(rng.standard_normal((n, p)))
    y = rng.standard_normal(n) * 3
    fit = fit_lasso(X, y, lam)
    if fit.converged:
        assert fit.kkt_gap <= KKT_TOL
        # independent recomputation of the conditions
        g = X.values.T @ (y - X.values @ fit.beta)
        nz = fit.beta != 0
        assert np.all(np.abs(g[~nz]) <= lam + KKT_TOL)
        assert np.all(np.abs(g[nz] - lam * np.sign(fit.beta[nz])) <= KKT_TOL)


def test_debug_mode_monotone_objective():
    X = gaussian_design(40, 70, 4)
    y = X.values[:, :5] @ np.full(5, 3.0) + np.random.default_rng(4).standard_normal(40)
    a = fit_lasso(X, y, 2.0, debug=True)
    b = fit_lasso(X, y, 2.0)
    np.testing.assert_allclose(a.beta, b.beta, atol=1e-12)
    assert a.iterations == b.iterations


def test_sweep_limit_warns():
    X = gaussian_design(40, 70, 5)
    y = np.random.default_rng(5).standard_normal(40)
    with pytest.warns(SweepLimit):
        fit = fit_lasso(X, y, 0.1, max_sweeps=2)
    assert not fit.converged and fit.iterations == 2
    assert fit.objective == pytest.approx(lasso_objective(X, y, fit.beta, 0.1))


def test_negative_lambda():
    with pytest.raises(ValueError):
        fit_lasso(np.eye(2), np.ones(2), -1.0)


def test_kkt_gap_checker_detects_violation():
    X = gaussian_design(10, 3, 6)
    y = np.ones(10)
    assert lasso_kkt_gap(X, y, np.array([5.0, 0.0, 0.0]), 1.0) > 1.0


def test_known_sigma_penalty():
    base = lasso_base_penalty(200, 400)
    assert base == pytest.approx(48.95493661361633, rel=1e-13)
    assert lasso_penalty_known_sigma(200, 1.0, base) == base
    assert lasso_penalty_known_sigma(200, 0.0, base) == 0.01 * base
    assert lasso_penalty_known_sigma(200, 3.0, base) == pytest.approx(146.8648098408490, rel=1e-13)
    with pytest.raises(ValueError):
        lasso_penalty_known_sigma(200, -1.0, base)


def test_kernels_agree():
    X = gaussian_design(60, 90, 7)
    y = X.values[:, :4] @ np.full(4, 2.0) + np.random.default_rng(7).standard_normal(60)
    a = fit_lasso(X, y, 3.0, kernel=cd_python)
    b = fit_lasso(X, y, 3.0, kernel=_kernels.cd_sweeps)
    np.testing.assert_allclose(a.beta, b.beta, atol=1e-13)
    assert a.iterations == b.iterations


def test_compiled_kernel_selected_when_built():
    try:
        import plad._cd  # noqa: F401
    except ImportError:
        pytest.skip("extension not built")
    assert _kernels.BACKEND == "cython"


def test_pure_python_override():
    code = "import plad._kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"PLAD_PURE_PYTHON": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "python"
