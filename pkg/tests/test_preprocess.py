import numpy as np
import pytest

from stresslab.preprocess import (MinMaxScaler, ScalerParams, apply_minmax,
                                  fit_minmax)


def test_known_column_maps_to_unit_interval():
    X = np.array([[0.0], [5.0], [10.0]])
    p = fit_minmax(X)
    out = apply_minmax(X, p)
    assert out[:, 0] == pytest.approx([0.0, 0.5, 1.0])


def test_constant_column_maps_to_zero():
    X = np.array([[7.0, 1.0], [7.0, 2.0], [7.0, 3.0]])
    out = apply_minmax(X, fit_minmax(X))
    assert (out[:, 0] == 0.0).all()
    assert out[:, 1] == pytest.approx([0.0, 0.5, 1.0])


def test_new_data_clipped_to_range():
    train = np.array([[0.0], [10.0]])
    p = fit_minmax(train)
    out = apply_minmax(np.array([[-5.0], [15.0], [5.0]]), p)
    assert out[:, 0] == pytest.approx([0.0, 1.0, 0.5])


def test_transform_uses_train_statistics_not_test():
    train = np.array([[2.0], [4.0]])
    p = fit_minmax(train)
    # value 3 sits halfway between the *train* min and max
    assert apply_minmax(np.array([[3.0]]), p)[0, 0] == pytest.approx(0.5)


def test_params_record_min_and_range():
    X = np.array([[1.0, -2.0], [3.0, 6.0]])
    p = fit_minmax(X)
    assert p.col_min == pytest.approx([1.0, -2.0])
    assert p.col_range == pytest.approx([2.0, 8.0])


def test_column_count_mismatch_rejected():
    p = fit_minmax(np.array([[1.0, 2.0], [3.0, 4.0]]))
    with pytest.raises(ValueError):
        apply_minmax(np.ones((2, 3)), p)


def test_fit_matrix_attains_both_bounds():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 5))
    out = apply_minmax(X, fit_minmax(X))
    assert out.min(axis=0) == pytest.approx(np.zeros(5), abs=0)
    assert out.max(axis=0) == pytest.approx(np.ones(5), abs=0)


def test_rescaling_scaled_matrix_is_identity():
    rng = np.random.default_rng(9)
    X = rng.uniform(-3, 7, size=(15, 4))
    Z = apply_minmax(X, fit_minmax(X))
    Z2 = apply_minmax(Z, fit_minmax(Z))
    assert np.abs(Z2 - Z).max() <= 1e-12


def test_empty_matrix_rejected():
    with pytest.raises(ValueError):
        fit_minmax(np.zeros((0, 3)))


def test_scaler_wrapper_round_trip():
    X = np.array([[0.0, 1.0], [4.0, 3.0], [8.0, 5.0]])
    s = MinMaxScaler().fit(X)
    out = s.transform(X)
    assert out.min() == 0.0 and out.max() == 1.0
    assert isinstance(s.params_, ScalerParams)
