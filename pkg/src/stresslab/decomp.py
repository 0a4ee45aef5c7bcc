"""Principal component analysis via SVD of the centered data matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .util import as_matrix


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray                # (d,) training column means
    components: np.ndarray          # (m, d) rows are retained components
    explained_variance: np.ndarray  # (m,) eigenvalues s^2/(n-1)
    explained_variance_ratio: np.ndarray  # (m,) fractions of total variance
    n_components: int
    target_ratio: float

    @property
    def cumulative_ratio(self) -> float:
        return float(self.explained_variance_ratio.sum())


def fit_pca(X, target_ratio: float = 0.95) -> PcaModel:
    """Retain the smallest count of components reaching target_ratio.

    At least one component is always kept. Component signs are fixed so the
    largest-magnitude loading of each component is positive, which removes
    the sign ambiguity of the SVD.
    """
    X = as_matrix(X)
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if not 0.0 < target_ratio <= 1.0:
        raise ValueError(f"target_ratio must be in (0, 1], got {target_ratio}")
    mean = X.mean(axis=0)
    centered = X - mean
    # rows of vt are right singular vectors == principal axes
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    var = s**2 / (n - 1)
    total = var.sum()
    if total <= 0:
        # constant matrix: every direction explains nothing; keep one axis
        ratios = np.zeros_like(var)
        keep = 1
    else:
        ratios = var / total
        cum = np.cumsum(ratios)
        # smallest m with cum >= target; tiny slack absorbs rounding at 1.0
        reached = np.flatnonzero(cum >= target_ratio - 1e-12)
        keep = int(reached[0]) + 1 if reached.size else len(ratios)
        keep = max(keep, 1)

    comp = vt[:keep].copy()
    for i in range(keep):
        j = int(np.argmax(np.abs(comp[i])))
        if comp[i, j] < 0:
            comp[i] = -comp[i]
    return PcaModel(
        mean=mean,
        components=comp,
        explained_variance=var[:keep].copy(),
        explained_variance_ratio=ratios[:keep].copy(),
        n_components=keep,
        target_ratio=float(target_ratio),
    )


def apply_pca(X, model: PcaModel) -> np.ndarray:
    """Project rows onto the retained components using the training mean."""
    X = as_matrix(X)
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"PCA fitted on {model.mean.shape[0]} features, got {X.shape[1]}"
        )
    return (X - model.mean) @ model.components.T
