import numpy as np
import pytest

from pqvarnet.embedding import (REGIONS, Breakpoints, PiecewiseEmbedding,
                                column_labels, compute_breakpoints, embed)
from pqvarnet.errors import DataError


def test_breakpoints_linear_interpolation():
    col = np.arange(1.0, 11.0)[:, None]
    bp = compute_breakpoints(col)
    # order-statistic interpolation by hand: 0.1*(10-1)=0.9 between 1 and 2
    assert bp.lower[0] == pytest.approx(1.9, abs=1e-12)
    assert bp.upper[0] == pytest.approx(9.1, abs=1e-12)


def test_breakpoints_sign_symmetric_sample():
    x = np.concatenate([np.arange(1.0, 26.0), -np.arange(1.0, 26.0)])[:, None]
    bp = compute_breakpoints(x)
    assert bp.lower[0] == pytest.approx(-bp.upper[0], abs=1e-12)


def test_breakpoints_constant_column_rejected():
    with pytest.raises(DataError, match="degenerate"):
        compute_breakpoints(np.full((20, 1), 3.0))


def test_breakpoints_need_enough_rows():
    with pytest.raises(DataError, match="at least 10"):
        compute_breakpoints(np.arange(9.0)[:, None])
    with pytest.raises(ValueError):
        compute_breakpoints(np.arange(20.0)[:, None], 0.9, 0.1)


def test_embed_pointwise_values():
    bp = Breakpoints(lower=np.array([-1.0]), upper=np.array([1.0]))
    out = embed(np.array([[0.0], [-2.0], [2.0]]), bp)
    assert np.allclose(out[0], [0.0, 0.0, 0.0])
    assert np.allclose(out[1], [-1.0, -2.0, 0.0])
    assert np.allclose(out[2], [0.0, 2.0, 1.0])


def test_embed_region_slopes_by_finite_differences():
    bp = Breakpoints(lower=np.array([-1.0]), upper=np.array([1.0]))
    eps = 1e-6
    for x, expected in ((-3.0, [1.0, 1.0, 0.0]),
                        (0.0, [0.0, 1.0, 0.0]),
                        (3.0, [0.0, 1.0, 1.0])):
        lo = embed(np.array([[x - eps]]), bp)[0]
        hi = embed(np.array([[x + eps]]), bp)[0]
        assert np.allclose((hi - lo) / (2 * eps), expected, atol=1e-9)


def test_embed_column_interleaving():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 3))
    bp = compute_breakpoints(X)
    out = embed(X, bp)
    assert out.shape == (100, 9)
    assert np.allclose(out[:, 1::3], X)
    assert np.all(out[:, 0::3] <= 0)
    assert np.all(out[:, 2::3] >= 0)


def test_tail_activation_rates_near_ten_percent():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(5000, 2))
    bp = compute_breakpoints(X)
    out = embed(X, bp)
    lower_active = np.mean(out[:, 0::3] < 0, axis=0)
    upper_active = np.mean(out[:, 2::3] > 0, axis=0)
    assert np.allclose(lower_active, 0.1, atol=0.01)
    assert np.allclose(upper_active, 0.1, atol=0.01)


def test_embed_dimension_mismatch():
    bp = Breakpoints(lower=np.array([-1.0]), upper=np.array([1.0]))
    with pytest.raises(ValueError, match="mismatch"):
        embed(np.zeros((4, 2)), bp)


def test_column_labels_order():
    assert column_labels(["a", "b"]) == [
        ("a", "lower"), ("a", "linear"), ("a", "upper"),
        ("b", "lower"), ("b", "linear"), ("b", "upper")]


def test_transformer_roundtrip_and_feature_names():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 2))
    tr = PiecewiseEmbedding().fit(X)
    assert np.allclose(tr.transform(X), embed(X, tr.breakpoints_))
    names = tr.get_feature_names_out(["btc", "eth"])
    assert list(names) == [f"{a}__{r}" for a in ("btc", "eth") for r in REGIONS]
    params = tr.get_params()
    assert params == {"lower_q": 0.1, "upper_q": 0.9}
