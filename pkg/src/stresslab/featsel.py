"""Univariate ANOVA-F selection and linear-SVM recursive feature elimination.

Both selectors return boolean column masks over the original feature order.
Infinite F-statistics (zero within-class variance with non-zero separation)
are kept as an explicit sentinel that ranks above every finite score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import accuracy
from .modelselect import cross_validate, stratified_kfold
from .svm import KernelSvm
from .util import as_labels, as_matrix, derive_seed


@dataclass(frozen=True)
class FeatureScores:
    f_values: np.ndarray  # per-feature F; np.inf marks infinite separation
    df_between: int       # C - 1
    df_within: int        # n - C


@dataclass(frozen=True)
class SelectionMask:
    kept: np.ndarray      # boolean per original column
    kept_count: int
    provenance: str       # 'kbest' or 'rfecv'

    def __post_init__(self):
        if self.kept_count != int(self.kept.sum()) or self.kept_count < 1:
            raise ValueError("mask count does not match its boolean vector")
        if self.provenance not in ("kbest", "rfecv"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def apply(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.kept.shape[0]:
            raise ValueError(
                f"mask covers {self.kept.shape[0]} columns, matrix has {X.shape[1]}"
            )
        return X[:, self.kept]


def anova_f_scores(X, y) -> FeatureScores:
    """Per-feature one-way ANOVA F-statistic against the class labels.

    F = [SSB/(C-1)] / [SSW/(n-C)]. Zero within-class variance with positive
    between-class separation maps to np.inf; zero separation maps to 0.
    """
    X = as_matrix(X)
    y = as_labels(y)
    n = X.shape[0]
    classes = np.unique(y)
    C = classes.shape[0]
    if C < 2:
        raise ValueError("ANOVA needs at least 2 classes present")
    if n <= C:
        raise ValueError(f"degenerate within-class dof: n={n} rows, {C} classes")
    grand = X.mean(axis=0)
    ssb = np.zeros(X.shape[1])
    ssw = np.zeros(X.shape[1])
    for c in classes:
        Xc = X[y == c]
        mean_c = Xc.mean(axis=0)
        ssb += Xc.shape[0] * (mean_c - grand) ** 2
        ssw += ((Xc - mean_c) ** 2).sum(axis=0)
    msb = ssb / (C - 1)
    msw = ssw / (n - C)
    f = np.zeros(X.shape[1])
    finite = (ssw > 0) & (ssb > 0)
    f[finite] = msb[finite] / msw[finite]
    f[(ssw == 0) & (ssb > 0)] = np.inf
    return FeatureScores(f_values=f, df_between=C - 1, df_within=n - C)


def select_top_k(scores: FeatureScores, k: int) -> SelectionMask:
    """Keep the k highest F-scores; ties go to the lower column index."""
    f = scores.f_values
    d = f.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    if np.isnan(f).any():
        raise ValueError("scores contain NaN")
    order = np.lexsort((np.arange(d), -f))
    kept = np.zeros(d, dtype=bool)
    kept[order[:k]] = True
    return SelectionMask(kept=kept, kept_count=k, provenance="kbest")


class _TopKLinearSvm:
    """Recipe for tune_k_by_cv: refit scores + mask + linear SVM per fold."""

    def __init__(self, k, seed):
        self.k = k
        self.seed = seed
        self.mask_ = None
        self.svm_ = None

    def fit(self, X, y):
        self.mask_ = select_top_k(anova_f_scores(X, y), self.k)
        self.svm_ = KernelSvm(kernel="linear", seed=self.seed)
        self.svm_.fit(self.mask_.apply(X), y)
        return self

    def predict(self, X):
        return self.svm_.predict(self.mask_.apply(X))


def _topk_factory(params, seed):
    return _TopKLinearSvm(params["k"], seed)


def tune_k_by_cv(X, y, folds: int = 10, seed: int = 0) -> int:
    """Pick the k-best width by stratified-CV accuracy of a default linear
    SVM on the top-k columns; smallest k wins ties. Scores and masks are
    recomputed inside each fold so no fold sees its own validation rows."""
    X = as_matrix(X)
    y = as_labels(y)
    d = X.shape[1]
    plan = stratified_kfold(y, folds, derive_seed(seed, "tune-k"))
    best_k = 1
    best_mean = -np.inf
    for k in range(1, d + 1):
        accs = cross_validate(_topk_factory, X, y, plan, params={"k": k},
                              seed=derive_seed(seed, "k", k))
        mean = float(accs.mean())
        if mean > best_mean:
            best_mean = mean
            best_k = k
    return best_k


def _importance_rank(importance, surviving):
    """Local keep-order: importance descending, original index ascending."""
    return np.lexsort((surviving, -importance))


def _eliminate(X, y, target_count: int, step: int, seed: int,
               record=None, X_val=None, y_val=None):
    """Drop `step` lowest-importance columns per refit until target_count
    remain; optionally record validation accuracy at every visited count."""
    surviving = np.arange(X.shape[1])
    while True:
        count = surviving.shape[0]
        svm = KernelSvm(kernel="linear", seed=derive_seed(seed, "fit", count))
        svm.fit(X[:, surviving], y)
        if record is not None:
            record[count].append(accuracy(y_val, svm.predict(X_val[:, surviving])))
        if count <= target_count:
            return surviving
        n_drop = min(step, count - target_count)
        order = _importance_rank(svm.feature_importance(), surviving)
        surviving = np.sort(surviving[order[:count - n_drop]])


def eliminate_to(X, y, count: int, step: int = 1, seed: int = 0) -> SelectionMask:
    """One elimination pass straight down to a fixed count, no CV.

    Used when a previously tuned surviving-feature count must be re-derived
    on different rows (stacking's out-of-fold member refits)."""
    X = as_matrix(X)
    y = as_labels(y)
    d = X.shape[1]
    if not 1 <= count <= d:
        raise ValueError(f"count must be in [1, {d}], got {count}")
    surviving = _eliminate(X, y, count, step, derive_seed(seed, "rfe-fixed"))
    kept = np.zeros(d, dtype=bool)
    kept[surviving] = True
    return SelectionMask(kept=kept, kept_count=count, provenance="rfecv")


def rfe_cv(X, y, folds: int = 5, step: int = 1, seed: int = 0) -> SelectionMask:
    """Recursive elimination over a linear SVM with stratified CV.

    Per fold, features are dropped step-at-a-time by the sum over the
    one-vs-rest machines of squared weights, recording validation accuracy
    at every surviving count. The count with the best mean accuracy wins
    (smallest on ties) and one elimination pass over the full matrix
    produces the final mask.
    """
    X = as_matrix(X)
    y = as_labels(y)
    d = X.shape[1]
    if folds < 2:
        raise ValueError(f"folds must be at least 2, got {folds}")
    if step < 1:
        raise ValueError(f"step must be at least 1, got {step}")
    plan = stratified_kfold(y, folds, derive_seed(seed, "rfe-folds"))

    counts = []
    c = d
    while c > 1:
        counts.append(c)
        c = max(1, c - step)
    counts.append(1)
    record = {c: [] for c in counts}

    for fi, (tr, val) in enumerate(plan.folds):
        _eliminate(X[tr], y[tr], 1, step, derive_seed(seed, "rfe", fi),
                   record=record, X_val=X[val], y_val=y[val])

    best_count = counts[-1]
    best_mean = -np.inf
    for c in sorted(counts):
        mean = float(np.mean(record[c]))
        if mean > best_mean:
            best_mean = mean
            best_count = c
    surviving = _eliminate(X, y, best_count, step, derive_seed(seed, "rfe-final"))
    kept = np.zeros(d, dtype=bool)
    kept[surviving] = True
    return SelectionMask(kept=kept, kept_count=best_count, provenance="rfecv")
