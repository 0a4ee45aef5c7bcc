"""Gini-impurity decision tree, the base learner for every tree ensemble.

Split scans are vectorized: per candidate feature the rows are sorted once
and all midpoint thresholds are scored from cumulative class-weight sums.
Tie-breaks are fixed everywhere (lower feature index, then lower threshold,
then lower class index) so a fitted tree is a pure function of
(data, params, seed).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .util import as_labels, as_matrix, derive_seed


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: object = None  # None=all, 'sqrt', 'log2', or a fixed count
    seed: int = 0


def gini_impurity(weights) -> float:
    """1 - sum(p_c^2) for class weights w_c, p_c = w_c / sum(w)."""
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise ValueError("class weights sum to zero")
    p = w / total
    return float(1.0 - np.dot(p, p))


def _n_candidate_features(mode, d: int) -> int:
    if mode is None or mode == "all":
        return d
    if mode == "sqrt":
        return max(1, int(np.sqrt(d)))
    if mode == "log2":
        return max(1, int(np.log2(d)))
    k = int(mode)
    if not 1 <= k <= d:
        raise ValueError(f"max_features={mode!r} out of range for {d} features")
    return k


def best_split(X, y, w=None, candidate_features=None, n_classes=None,
               min_samples_leaf=1):
    """Best (feature, threshold, gain) by weighted Gini decrease, or None.

    Scans midpoints between consecutive distinct sorted values. Gain is
    parent impurity minus the weight-fraction-averaged child impurity, so it
    is invariant to rescaling all sample weights.
    """
    X = as_matrix(X)
    y = as_labels(y)
    n = y.shape[0]
    if w is None:
        w = np.ones(n)
    else:
        w = np.asarray(w, dtype=np.float64)
    total_w = w.sum()
    if total_w <= 0:
        raise ValueError("sample weights sum to zero")
    C = int(n_classes) if n_classes else int(y.max()) + 1
    class_w = np.zeros((n, C))
    class_w[np.arange(n), y] = w
    parent_w = class_w.sum(axis=0)
    s_parent = np.dot(parent_w, parent_w)

    if candidate_features is None:
        candidate_features = range(X.shape[1])

    best = None
    best_gain = 0.0
    for f in sorted(int(f) for f in candidate_features):
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cuts = np.flatnonzero(sv[:-1] < sv[1:])
        if cuts.size == 0:
            continue
        left_n = cuts + 1
        ok = (left_n >= min_samples_leaf) & (n - left_n >= min_samples_leaf)
        cuts = cuts[ok]
        if cuts.size == 0:
            continue
        cum = np.cumsum(class_w[order], axis=0)
        lw = cum[cuts]
        rw = parent_w - lw
        lt = lw.sum(axis=1)
        rt = total_w - lt
        s_l = np.einsum("ij,ij->i", lw, lw)
        s_r = np.einsum("ij,ij->i", rw, rw)
        # gain = parent_gini - (lt*gini_l + rt*gini_r)/W, algebraically:
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = (np.where(lt > 0, s_l / lt, 0.0)
                     + np.where(rt > 0, s_r / rt, 0.0)) / total_w - s_parent / total_w**2
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            thr = (sv[cuts[i]] + sv[cuts[i] + 1]) / 2.0
            best = (f, float(thr), best_gain)
    return best


class DecisionTree:
    """CART classifier; rows with value < threshold go left.

    Leaves store weighted class proportions; predictions are argmax with
    ties resolved toward the lower class index.
    """

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=None, seed=0):
        self.params = TreeParams(max_depth, min_samples_split,
                                 min_samples_leaf, max_features, seed)
        self.n_classes_ = None
        self.n_features_ = None
        # parallel arrays over nodes; feature == -1 marks a leaf
        self.feature_ = None
        self.threshold_ = None
        self.left_ = None
        self.right_ = None
        self.proba_ = None

    def fit(self, X, y, sample_weight=None, n_classes=None):
        X = as_matrix(X)
        y = as_labels(y)
        n, d = X.shape
        if n < 1:
            raise ValueError("cannot fit a tree on zero rows")
        if sample_weight is None:
            w = np.ones(n)
        else:
            w = np.asarray(sample_weight, dtype=np.float64)
            if w.min() < 0 or w.sum() <= 0:
                raise ValueError("sample weights must be non-negative with positive sum")
        self.n_classes_ = int(n_classes) if n_classes else int(y.max()) + 1
        self.n_features_ = d

        p = self.params
        m = _n_candidate_features(p.max_features, d)
        rng = np.random.default_rng(derive_seed(p.seed, "tree-features"))

        feature, threshold, left, right, proba = [], [], [], [], []

        def leaf(idx):
            cw = np.bincount(y[idx], weights=w[idx], minlength=self.n_classes_)
            total = cw.sum()
            node = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            proba.append(cw / total if total > 0 else
                         np.full(self.n_classes_, 1.0 / self.n_classes_))
            return node

        def grow(idx, depth):
            node_y = y[idx]
            if (p.max_depth is not None and depth >= p.max_depth) \
                    or idx.size < p.min_samples_split \
                    or (node_y == node_y[0]).all():
                return leaf(idx)
            if m < d:
                cand = rng.choice(d, size=m, replace=False)
            else:
                cand = np.arange(d)
            found = best_split(X[idx], node_y, w[idx], cand,
                               n_classes=self.n_classes_,
                               min_samples_leaf=p.min_samples_leaf)
            if found is None:
                return leaf(idx)
            f, thr, _ = found
            go_left = X[idx, f] < thr
            node = len(feature)
            feature.append(f)
            threshold.append(thr)
            left.append(-1)
            right.append(-1)
            proba.append(None)
            left[node] = grow(idx[go_left], depth + 1)
            right[node] = grow(idx[~go_left], depth + 1)
            return node

        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 10000))
        try:
            grow(np.arange(n), 0)
        finally:
            sys.setrecursionlimit(old_limit)

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold, dtype=np.float64)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.proba_ = np.vstack([
            p_ if p_ is not None else np.zeros(self.n_classes_) for p_ in proba
        ])
        return self

    @property
    def n_internal_nodes(self) -> int:
        return int((self.feature_ >= 0).sum())

    def _leaf_of(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.n_features_:
            raise ValueError(
                f"tree fitted on {self.n_features_} features, got {X.shape[1]}"
            )
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature_[cur]] < self.threshold_[cur]
            node[rows] = np.where(go_left, self.left_[cur], self.right_[cur])
            active = self.feature_[node] >= 0
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.proba_[self._leaf_of(X)]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)
