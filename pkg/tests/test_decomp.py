import numpy as np
import pytest

from stresslab.decomp import apply_pca, fit_pca


def eig_oracle(X):
    """Eigendecomposition of the sample covariance, descending order."""
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def test_variances_match_eigendecomposition():
    rng = np.random.default_rng(21)
    for _ in range(30):
        X = rng.normal(size=(6, 4))
        m = fit_pca(X, 1.0)
        vals, _ = eig_oracle(X)
        assert np.abs(m.explained_variance - vals[:m.n_components]).max() <= 1e-8
        ratios = vals / vals.sum()
        assert np.abs(m.explained_variance_ratio
                      - ratios[:m.n_components]).max() <= 1e-8


def test_known_ratio_split_picks_component_count():
    # two orthogonal directions with variance 9 and 1 -> ratios 0.9, 0.1
    rng = np.random.default_rng(5)
    t = rng.normal(size=400)
    u = rng.normal(size=400)
    t = (t - t.mean()) / t.std(ddof=1) * 3.0
    u = (u - u.mean()) / u.std(ddof=1)
    X = np.column_stack([t, u])
    m90 = fit_pca(X, 0.90)
    assert m90.n_components == 1
    m95 = fit_pca(X, 0.95)
    assert m95.n_components == 2


def test_target_of_one_keeps_everything():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(10, 3))
    m = fit_pca(X, 1.0)
    assert m.n_components == 3
    assert m.cumulative_ratio == pytest.approx(1.0)


def test_component_count_never_below_one():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(8, 3))
    assert fit_pca(X, 1e-9).n_components == 1


def test_sign_convention_largest_loading_positive():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(12, 5))
    m = fit_pca(X, 1.0)
    for row in m.components:
        assert row[np.argmax(np.abs(row))] > 0


def test_constant_matrix_degenerates_to_one_zero_component():
    X = np.full((5, 3), 2.5)
    m = fit_pca(X, 0.95)
    assert m.n_components == 1
    assert m.explained_variance_ratio[0] == 0.0


def test_transform_centers_and_projects():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(9, 4))
    m = fit_pca(X, 1.0)
    Z = apply_pca(X, m)
    assert Z.shape == (9, 4)
    # projection of the training matrix has (near) zero column means
    assert np.abs(Z.mean(axis=0)).max() <= 1e-12
    # full projection preserves pairwise distances (orthonormal basis)
    d_orig = np.linalg.norm(X[0] - X[1])
    assert np.linalg.norm(Z[0] - Z[1]) == pytest.approx(d_orig)


def test_reconstruction_error_decreases_with_components():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(20, 6)) @ np.diag([3, 2.5, 2, 1, 0.5, 0.1])
    m = fit_pca(X, 1.0)
    Xc = X - m.mean
    prev = np.inf
    for k in range(1, m.n_components + 1):
        W = m.components[:k]
        err = np.linalg.norm(Xc - (Xc @ W.T) @ W)
        assert err <= prev + 1e-12
        prev = err


def test_dimension_mismatch_rejected():
    X = np.random.default_rng(1).normal(size=(6, 3))
    m = fit_pca(X, 0.9)
    with pytest.raises(ValueError):
        apply_pca(np.ones((2, 5)), m)


def test_input_validation():
    with pytest.raises(ValueError):
        fit_pca(np.ones((1, 3)), 0.9)  # a single row has no variance
    with pytest.raises(ValueError):
        fit_pca(np.ones((5, 3)), 0.0)
    with pytest.raises(ValueError):
        fit_pca(np.ones((5, 3)), 1.5)
