import numpy as np
import pytest
from scipy.special import erfcinv

from conftest import lp_pinball_optimum
from pqvarnet.errors import RankDeficientError
from pqvarnet.quantreg import (QuantileRegressor, estimate_covariance,
                               hall_sheather_bandwidth, kde_density_at_zero,
                               pinball_loss, wald_t)


def test_pinball_loss_values():
    assert pinball_loss(1.0, 0.0, 0.9) == pytest.approx(0.9)
    assert pinball_loss(0.0, 1.0, 0.9) == pytest.approx(0.1)
    assert np.all(pinball_loss([3.0, -2.0], [3.0, -2.0], 0.3) == 0.0)
    with pytest.raises(ValueError):
        pinball_loss(1.0, 0.0, 1.5)


def test_intercept_only_median():
    y = np.arange(1.0, 10.0)
    model = QuantileRegressor(q=0.5).fit(np.empty((9, 0)), y)
    assert model.intercept_ == pytest.approx(5.0, abs=1e-9)
    assert model.coef_.size == 0


def test_intercept_only_upper_quantile_hits_grid_optimum():
    y = np.arange(1.0, 10.0)
    model = QuantileRegressor(q=0.9).fit(np.empty((9, 0)), y)
    assert 8.0 - 1e-9 <= model.intercept_ <= 9.0 + 1e-9
    # brute-force 1-D grid: no intercept value does better
    grid = np.linspace(0.0, 10.0, 20001)
    grid_best = min(np.mean(pinball_loss(y, np.full(9, c), 0.9)) for c in grid)
    fitted = np.mean(pinball_loss(y, np.full(9, model.intercept_), 0.9))
    assert fitted <= grid_best + 1e-9


@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_exact_linear_relation_recovered(q):
    x = np.linspace(-3, 3, 40)[:, None]
    y = 2.0 * x.ravel()
    model = QuantileRegressor(q=q).fit(x, y)
    assert model.coef_[0] == pytest.approx(2.0, abs=1e-8)
    assert model.intercept_ == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("seed", [0, 1, 2, 42])
@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_solver_matches_lp_oracle(seed, q):
    rng = np.random.default_rng(seed)
    T, K = 50, 2
    X = rng.normal(size=(T, K))
    y = X @ rng.normal(size=K) + rng.standard_t(4, size=T)
    model = QuantileRegressor(q=q).fit(X, y)
    assert model.objective(X, y) <= lp_pinball_optimum(X, y, q) * (1 + 1e-6) + 1e-12


def test_location_and_scale_equivariance():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 2))
    y = X @ [1.0, -0.5] + rng.normal(size=80)
    base = QuantileRegressor(q=0.3).fit(X, y)
    shifted = QuantileRegressor(q=0.3).fit(X, y + 7.0)
    assert shifted.intercept_ == pytest.approx(base.intercept_ + 7.0, abs=1e-7)
    assert np.allclose(shifted.coef_, base.coef_, atol=1e-7)
    scaled = QuantileRegressor(q=0.3).fit(X, 3.0 * y)
    assert np.allclose(scaled.coef_, 3.0 * base.coef_, atol=1e-6)


def test_zero_column_rejected():
    X = np.column_stack([np.zeros(20), np.arange(20.0)])
    with pytest.raises(RankDeficientError) as exc:
        QuantileRegressor().fit(X, np.arange(20.0))
    assert exc.value.columns == [0]


def test_collinear_design_rejected():
    x = np.arange(20.0)
    X = np.column_stack([x, 2.0 * x])
    with pytest.raises(RankDeficientError):
        QuantileRegressor().fit(X, x)


def test_shape_validation():
    with pytest.raises(ValueError, match="length mismatch"):
        QuantileRegressor().fit(np.ones((5, 1)), np.ones(4))
    with pytest.raises(ValueError, match="more observations"):
        QuantileRegressor().fit(np.ones((2, 3)) + np.eye(2, 3), np.ones(2))
    with pytest.raises(ValueError, match="quantile"):
        QuantileRegressor(q=0.0).fit(np.ones((5, 1)), np.ones(5))


def test_kde_density_values():
    assert kde_density_at_zero([0.0], bandwidth=1.0) == pytest.approx(
        1.0 / np.sqrt(2 * np.pi), abs=1e-5)
    # independent evaluation of (phi(-1) + phi(1)) / 2
    phi1 = np.exp(-0.5) / np.sqrt(2 * np.pi)
    assert kde_density_at_zero([-1.0, 1.0], bandwidth=1.0) == pytest.approx(
        phi1, abs=1e-10)
    assert kde_density_at_zero(np.full(50, 10.0), bandwidth=0.1) == 1e-10
    with pytest.raises(ValueError):
        kde_density_at_zero([])
    with pytest.raises(ValueError):
        kde_density_at_zero([1.0, 2.0], exclude_smallest=2)


def test_kde_exclusion_drops_interpolation_zeros():
    resid = np.array([0.0, 0.0, -1.0, 1.0, 2.0, -2.0])
    full = kde_density_at_zero(resid, bandwidth=0.5)
    trimmed = kde_density_at_zero(resid, bandwidth=0.5, exclude_smallest=2)
    assert trimmed < full


def test_hall_sheather_properties():
    assert hall_sheather_bandwidth(1000, 0.5) > hall_sheather_bandwidth(2000, 0.5)
    assert hall_sheather_bandwidth(500, 0.1) == pytest.approx(
        hall_sheather_bandwidth(500, 0.9), abs=1e-15)
    # independent evaluation of the closed form at T=1000, q=0.5
    z_a = -np.sqrt(2.0) * erfcinv(2.0 * (1.0 - 0.05 / 2.0))
    phi0 = 1.0 / np.sqrt(2.0 * np.pi)
    expected = 1000 ** (-1 / 3) * z_a ** (2 / 3) * (1.5 * phi0**2) ** (1 / 3)
    assert hall_sheather_bandwidth(1000, 0.5) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        hall_sheather_bandwidth(1, 0.5)


def test_sandwich_all_positive_residuals_collapses():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 2))
    resid = np.abs(rng.normal(size=60)) + 0.1
    cov = estimate_covariance(X, resid, 0.5, f0=1.0)
    Xa = np.column_stack([np.ones(60), X])
    expected = 0.5 * np.linalg.inv(Xa.T @ Xa)
    assert np.allclose(cov, expected, atol=1e-10)


def test_sandwich_hand_value_intercept_only():
    resid = np.concatenate([np.ones(50), -np.ones(50)])
    cov = estimate_covariance(np.empty((100, 0)), resid, 0.5, f0=1.0)
    # X'X = 100, D diagonal = 0.5, so Var = 100^-1 * 50 * 100^-1 = 0.005
    assert cov.shape == (1, 1)
    assert cov[0, 0] == pytest.approx(0.005, abs=1e-14)


def test_sandwich_scaling_law():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 1))
    resid = rng.normal(size=80)
    v1 = estimate_covariance(X, resid, 0.5, f0=0.4)[1, 1]
    v2 = estimate_covariance(2.0 * X, resid, 0.5, f0=0.4)[1, 1]
    assert v2 == pytest.approx(v1 / 4.0, rel=1e-10)


def test_sandwich_matches_dense_oracle():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(120, 3))
    resid = rng.normal(size=120)
    q, f0 = 0.25, 0.37
    cov = estimate_covariance(X, resid, q, f0)
    Xa = np.column_stack([np.ones(120), X])
    d = np.where(resid > 0, q, 1.0 - q) / f0**2
    bread = np.linalg.inv(Xa.T @ Xa)
    oracle = bread @ (Xa.T * d) @ Xa @ bread
    assert np.max(np.abs(cov - oracle)) < 1e-10


def test_boundary_residual_takes_lower_branch():
    resid = np.array([0.0, 1.0, -1.0])
    cov_zero = estimate_covariance(np.empty((3, 0)), resid, 0.9, f0=1.0)
    resid_neg = np.array([-1e-12, 1.0, -1.0])
    cov_neg = estimate_covariance(np.empty((3, 0)), resid_neg, 0.9, f0=1.0)
    assert cov_zero[0, 0] == pytest.approx(cov_neg[0, 0], rel=1e-12)


def test_wald_t_values():
    assert wald_t(0.0, 2.0) == 0.0
    assert wald_t(1.5, 0.5) == pytest.approx(3.0)
    assert wald_t(-2.0, 0.5) == pytest.approx(-4.0)
    with pytest.raises(ValueError):
        wald_t(1.0, 0.0)


def test_fitted_attributes_and_predict():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 2))
    y = X @ [0.5, -1.0] + rng.normal(size=200)
    model = QuantileRegressor(q=0.5).fit(X, y)
    assert model.cov_.shape == (3, 3)
    assert model.f0_ > 0
    assert model.residuals_.shape == (200,)
    assert model.t_values().shape == (2,)
    assert np.allclose(model.predict(X), X @ model.coef_ + model.intercept_)


def test_t_value_null_calibration_is_conservative():
    """Null Wald statistics stay centred and never over-reject.

    The sandwich weight q (or 1-q) has expectation 2q(1-q), twice the
    tight asymptotic value, so the estimator is conservative by design:
    null t-values concentrate with spread about 1/sqrt(2).
    """
    rng = np.random.default_rng(11)
    tvals = []
    for _ in range(400):
        X = rng.normal(size=(250, 1))
        y = rng.normal(size=250)
        tvals.append(QuantileRegressor(q=0.5).fit(X, y).t_values()[0])
    tvals = np.asarray(tvals)
    assert abs(np.mean(tvals)) < 0.15
    assert 0.5 < np.std(tvals) < 1.1
    assert np.mean(np.abs(tvals) > 1.96) <= 0.06
