"""Synthetic datasets with known structure, for tests and demos.

make_informative plants a handful of class-separating columns among pure
noise at known positions, which lets a test assert that feature selection
recovers exactly those columns.
"""

from __future__ import annotations

import numpy as np

from .util import derive_seed


def make_informative(n_rows: int, n_features: int, n_informative: int,
                     n_classes: int, separation: float = 3.0, seed: int = 0):
    """Gaussian classes whose means differ only on the informative columns.

    Class c sits at ``separation`` along informative axis ``c mod
    n_informative``; every other coordinate, informative or not, is unit
    noise. Returns (X, y, informative_columns) with the informative
    columns scattered to seeded positions and reported sorted ascending.
    """
    if not 0 < n_informative <= n_features:
        raise ValueError("need 0 < n_informative <= n_features")
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if n_rows < n_classes:
        raise ValueError("need at least one row per class")
    rng = np.random.default_rng(derive_seed(seed, "make-informative"))

    y = np.arange(n_rows) % n_classes
    rng.shuffle(y)

    means = np.zeros((n_classes, n_informative))
    for c in range(n_classes):
        means[c, c % n_informative] = separation

    X = rng.standard_normal((n_rows, n_features))
    positions = np.sort(rng.permutation(n_features)[:n_informative])
    X[:, positions] += means[y]
    return X, y.astype(np.int64), positions


def make_blobs(n_rows: int, n_features: int, n_classes: int,
               spread: float = 1.0, center_scale: float = 5.0, seed: int = 0):
    """Isotropic Gaussian blobs around random centers. Returns (X, y)."""
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if n_rows < n_classes:
        raise ValueError("need at least one row per class")
    rng = np.random.default_rng(derive_seed(seed, "make-blobs"))
    centers = rng.uniform(-center_scale, center_scale,
                          size=(n_classes, n_features))
    y = np.arange(n_rows) % n_classes
    rng.shuffle(y)
    X = centers[y] + spread * rng.standard_normal((n_rows, n_features))
    return X, y.astype(np.int64)


def write_csv(path: str, X, y, target_column: str = "stress_level",
              feature_names=None, label_names=None) -> None:
    """Write a feature matrix and labels in the loader's expected layout."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if feature_names is None:
        feature_names = [f"q{j + 1}" for j in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match columns")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(list(feature_names) + [target_column]) + "\n")
        for row, label in zip(X, y):
            cells = [format(v, ".10g") for v in row]
            name = label_names[int(label)] if label_names else str(int(label))
            fh.write(",".join(cells + [str(name)]) + "\n")
