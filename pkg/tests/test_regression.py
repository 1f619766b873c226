import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from traincarbon.errors import InsufficientRows, NonpositiveInput, SingularDesign
from traincarbon.regression import (
    TIER2_MODEL,
    TIER3_MODEL,
    RegressionModel,
    fit_ols_loglog,
    load_coefficients,
    ols_hc3,
    predict_tier2,
    predict_tier3,
    tier2_regressors,
)


def test_worked_predictions():
    assert predict_tier2(1e21, 0.4, "A_family") == pytest.approx(1.05930, rel=1e-4)
    assert predict_tier3(7e9, 0.445, False) == pytest.approx(1.62947, rel=1e-4)


@pytest.mark.parametrize("group,gamma", [("A_family", 0.0), ("H_family", -0.827), ("Others", 0.629)])
@pytest.mark.parametrize("flops,ef", [(1e18, 0.05), (3e21, 0.4), (5e24, 0.9)])
def test_tier2_power_law(group, gamma, flops, ef):
    assert predict_tier2(flops, ef, group) == pytest.approx(O.tier2(flops, ef, gamma), rel=1e-12)


@pytest.mark.parametrize("instruct", [False, True])
def test_tier3_power_law(instruct):
    assert predict_tier3(1e9, 0.3, instruct) == pytest.approx(O.tier3(1e9, 0.3, instruct), rel=1e-12)


@pytest.mark.parametrize("args", [(0, 0.4, "A_family"), (1e21, 0, "A_family"), (float("inf"), 0.4, "Others"),
                                  (-1, 0.4, "H_family")])
def test_tier2_nonpositive(args):
    with pytest.raises(NonpositiveInput):
        predict_tier2(*args)


def test_tier3_nonpositive():
    with pytest.raises(NonpositiveInput):
        predict_tier3(0, 0.4, False)


@given(st.floats(1e15, 1e26), st.floats(1.01, 100))
def test_tier2_elasticity(flops, k):
    ratio = predict_tier2(k * flops, 0.4, "A_family") / predict_tier2(flops, 0.4, "A_family")
    assert ratio == pytest.approx(k ** 0.829, rel=1e-9)


def test_model_round_trip():
    assert RegressionModel.from_dict(TIER2_MODEL.to_dict()) == TIER2_MODEL
    assert load_coefficients()["tier3"] == TIER3_MODEL
    assert TIER2_MODEL.robust_se["log_flops"] == 0.034


def test_unknown_regressor():
    with pytest.raises(KeyError):
        TIER2_MODEL.linear_predictor({"log_params": 1.0})


# -- OLS and HC3 ----------------------------------------------------------------

def _hat_hc3(X, y):
    # textbook formulas via explicit inverses
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ X.T @ y
    H = X @ xtx_inv @ X.T
    e = y - X @ beta
    h = np.diag(H)
    omega = np.diag(e ** 2 / (1 - h) ** 2)
    return beta, xtx_inv @ X.T @ omega @ X @ xtx_inv, h, e


def test_hc3_matches_hat_matrix_five_rows():
    X = np.array([[1, 0.0, 1.0], [1, 1.0, 0.5], [1, 2.0, 2.5], [1, 3.0, 1.0], [1, 4.0, 3.5]])
    y = np.array([0.1, 1.2, 1.9, 3.2, 3.9])
    beta, cov, lev, resid = ols_hc3(X, y)
    b2, c2, h2, e2 = _hat_hc3(X, y)
    np.testing.assert_allclose(beta, b2, rtol=1e-10)
    np.testing.assert_allclose(cov, c2, rtol=1e-8, atol=1e-14)
    np.testing.assert_allclose(lev, h2, rtol=1e-10)
    np.testing.assert_allclose(resid, e2, atol=1e-12)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.integers(8, 60))
def test_residuals_orthogonal(seed, n):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 3))])
    y = X @ rng.normal(size=4) + rng.normal(size=n)
    beta, _, lev, resid = ols_hc3(X, y)
    assert np.max(np.abs(X.T @ resid)) < 1e-8 * max(1.0, np.max(np.abs(y)))
    assert lev.sum() == pytest.approx(4.0)


def test_against_statsmodels():
    sm = pytest.importorskip("statsmodels.api")
    rng = np.random.default_rng(3)
    n = 80
    X = np.column_stack([np.ones(n), rng.normal(size=n), rng.integers(0, 2, n)])
    y = X @ np.array([1.0, 0.5, -0.3]) + rng.normal(scale=0.2 + 0.3 * np.abs(X[:, 1]), size=n)
    beta, cov, _, _ = ols_hc3(X, y)
    ref = sm.OLS(y, X).fit(cov_type="HC3")
    np.testing.assert_allclose(beta, ref.params, rtol=1e-10)
    np.testing.assert_allclose(np.sqrt(np.diag(cov)), ref.bse, rtol=1e-8)


def test_singular_design():
    X = np.column_stack([np.ones(6), np.arange(6.0), 2 * np.arange(6.0)])
    with pytest.raises(SingularDesign):
        ols_hc3(X, np.arange(6.0))


def test_insufficient_rows():
    with pytest.raises(InsufficientRows):
        ols_hc3(np.ones((2, 2)), np.ones(2))
    with pytest.raises(InsufficientRows):
        fit_ols_loglog([(1.0, {"a": 1.0})] * 2, ["a"])


def test_fit_recovers_exact_relation():
    rows = [(2.0 + 0.5 * x - 1.5 * g, {"x": x, "g": g})
            for x, g in [(0, 0), (1, 1), (2, 0), (3, 1), (4, 0), (5, 1)]]
    model = fit_ols_loglog(rows)
    assert model.terms == ("intercept", "x", "g")
    for k, v in {"intercept": 2.0, "x": 0.5, "g": -1.5}.items():
        assert model.coefficients[k] == pytest.approx(v, abs=1e-10)
    assert model.n_obs == 6


def test_fit_absent_terms_are_zero():
    rows = [(math.log(predict_tier2(f, 0.3 + 0.1 * i, g)), tier2_regressors(f, 0.3 + 0.1 * i, g))
            for i, (f, g) in enumerate([(1e20, "A_family"), (1e21, "H_family"), (1e22, "Others"),
                                        (3e20, "A_family"), (3e21, "H_family"), (3e22, "Others"),
                                        (5e23, "A_family")])]
    model = fit_ols_loglog(rows, TIER2_MODEL.terms)
    for k, v in TIER2_MODEL.coefficients.items():
        assert model.coefficients[k] == pytest.approx(v, abs=1e-8)
