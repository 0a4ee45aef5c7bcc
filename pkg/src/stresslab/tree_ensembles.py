"""Tree-based classifiers: random forest, bagging, SAMME AdaBoost, and two
multinomial boosting variants (plain gradient and regularized second-order).

Both boosting variants share a small regression-tree builder whose split
scan mirrors the classification tree: features ascending, midpoint
thresholds, ties toward the lower feature then the lower threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import DecisionTree, TreeParams
from .util import as_labels, as_matrix, derive_seed, n_classes_of, softmax


def multinomial_log_loss(y, proba) -> float:
    y = as_labels(y)
    p = np.clip(np.asarray(proba, dtype=np.float64), 1e-15, 1.0)
    return float(-np.mean(np.log(p[np.arange(y.shape[0]), y])))


def softmax_loss_grad_hess(raw, y):
    """Cross-entropy of softmax(raw) against labels, with its per-entry
    gradient g = p - onehot and diagonal Hessian h = p(1-p)."""
    raw = as_matrix(raw)
    y = as_labels(y)
    p = softmax(raw)
    onehot = np.zeros_like(p)
    onehot[np.arange(y.shape[0]), y] = 1.0
    loss = float(-np.sum(onehot * np.log(np.clip(p, 1e-300, 1.0))))
    return loss, p - onehot, p * (1.0 - p)


# ---------------------------------------------------------------- forests


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    tree_seeds: tuple
    kind: str  # 'random_forest' or 'bagging'
    n_classes: int


def _fit_forest(X, y, n_trees, tree_params, seed, kind, bootstrap):
    X = as_matrix(X)
    y = as_labels(y)
    if n_trees < 1:
        raise ValueError(f"need at least one tree, got {n_trees}")
    n = X.shape[0]
    C = n_classes_of(y)
    max_features = "sqrt" if kind == "random_forest" else None
    trees, seeds = [], []
    for t in range(n_trees):
        ts = derive_seed(seed, "tree", t)
        if bootstrap:
            rng = np.random.default_rng(derive_seed(ts, "bootstrap"))
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        tree = DecisionTree(
            max_depth=tree_params.max_depth,
            min_samples_split=tree_params.min_samples_split,
            min_samples_leaf=tree_params.min_samples_leaf,
            max_features=max_features,
            seed=ts,
        )
        tree.fit(X[rows], y[rows], n_classes=C)
        trees.append(tree)
        seeds.append(ts)
    return ForestModel(trees=tuple(trees), tree_seeds=tuple(seeds),
                       kind=kind, n_classes=C)


def fit_random_forest(X, y, n_trees: int, tree_params: TreeParams = TreeParams(),
                      seed: int = 0, bootstrap: bool = True) -> ForestModel:
    """Bootstrap-sampled trees with sqrt-feature subsampling per node."""
    return _fit_forest(X, y, n_trees, tree_params, seed, "random_forest", bootstrap)


def fit_bagging(X, y, n_estimators: int, tree_params: TreeParams = TreeParams(),
                seed: int = 0, bootstrap: bool = True) -> ForestModel:
    """Bootstrap-sampled trees considering every feature at every node."""
    return _fit_forest(X, y, n_estimators, tree_params, seed, "bagging", bootstrap)


def predict_proba_forest(model: ForestModel, X) -> np.ndarray:
    """Mean of the member trees' leaf class proportions."""
    total = model.trees[0].predict_proba(X).copy()
    for tree in model.trees[1:]:
        total += tree.predict_proba(X)
    return total / len(model.trees)


def predict_forest(model: ForestModel, X) -> np.ndarray:
    return np.argmax(predict_proba_forest(model, X), axis=1)


# ---------------------------------------------------------------- AdaBoost


@dataclass(frozen=True)
class AdaBoostModel:
    stages: tuple  # of (DecisionTree, stage weight alpha)
    n_classes: int
    degenerate: bool = False  # every stage failed the error bound


def fit_adaboost(X, y, n_stages: int, max_depth: int = 1,
                 seed: int = 0) -> AdaBoostModel:
    """Multiclass SAMME over shallow weighted trees.

    Per stage: fit on current weights, compute the weighted error, weight
    the stage by ln((1-err)/err) + ln(C-1), then upweight misclassified
    rows and renormalize. Stops early on a stage with err >= 1 - 1/C
    (discarded) or err == 0 (kept with a capped weight).
    """
    X = as_matrix(X)
    y = as_labels(y)
    if n_stages < 1:
        raise ValueError(f"need at least one stage, got {n_stages}")
    n = X.shape[0]
    C = n_classes_of(y)
    if C < 2:
        raise ValueError("AdaBoost needs at least 2 classes")
    w = np.full(n, 1.0 / n)
    stages = []
    for m in range(n_stages):
        tree = DecisionTree(max_depth=max_depth,
                            seed=derive_seed(seed, "stage", m))
        tree.fit(X, y, sample_weight=w, n_classes=C)
        pred = tree.predict(X)
        miss = pred != y
        err = float(w[miss].sum())
        if err >= 1.0 - 1.0 / C:
            break
        if err <= 0.0:
            eps = 1e-10
            alpha = float(np.log((1.0 - eps) / eps) + np.log(C - 1.0))
            stages.append((tree, alpha))
            break
        alpha = float(np.log((1.0 - err) / err) + np.log(C - 1.0))
        stages.append((tree, alpha))
        w = w * np.where(miss, np.exp(alpha), 1.0)
        w = w / w.sum()
    degenerate = not stages
    if degenerate:
        # the first stage already violated the error bound; keep a single
        # majority-vote leaf so the model still predicts
        leaf = DecisionTree(max_depth=0, seed=derive_seed(seed, "fallback"))
        leaf.fit(X, y, sample_weight=w, n_classes=C)
        stages.append((leaf, 1.0))
    return AdaBoostModel(stages=tuple(stages), n_classes=C, degenerate=degenerate)


def predict_proba_adaboost(model: AdaBoostModel, X) -> np.ndarray:
    """Stage-weighted vote mass per class, normalized to sum to one."""
    X = as_matrix(X)
    votes = np.zeros((X.shape[0], model.n_classes))
    for tree, alpha in model.stages:
        pred = tree.predict(X)
        votes[np.arange(X.shape[0]), pred] += alpha
    return votes / votes.sum(axis=1, keepdims=True)


def predict_adaboost(model: AdaBoostModel, X) -> np.ndarray:
    return np.argmax(predict_proba_adaboost(model, X), axis=1)


# ------------------------------------------------- regression value trees


class _ValueTree:
    """Regression tree over a fixed structure; leaves hold scalar values."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] < self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]


def _grow_value_tree(X, stats, gain_fn, leaf_fn, max_depth, min_samples_split,
                     min_samples_leaf):
    """Shared builder: stats is (n, 2) of additive per-row statistics; the
    criterion closures see cumulative left sums and node totals."""
    n = X.shape[0]
    feature, threshold, left, right, value = [], [], [], [], []

    def scan(idx):
        node_stats = stats[idx]
        tot = node_stats.sum(axis=0)
        m = idx.shape[0]
        best = None
        best_gain = 0.0
        for f in range(X.shape[1]):
            vals = X[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            cuts = np.flatnonzero(sv[:-1] < sv[1:])
            if cuts.size == 0:
                continue
            left_n = cuts + 1
            ok = (left_n >= min_samples_leaf) & (m - left_n >= min_samples_leaf)
            cuts = cuts[ok]
            if cuts.size == 0:
                continue
            cum = np.cumsum(node_stats[order], axis=0)
            L = cum[cuts]
            gains = gain_fn(L[:, 0], L[:, 1], cuts + 1.0, tot[0], tot[1], float(m))
            i = int(np.argmax(gains))
            if gains[i] > best_gain:
                best_gain = float(gains[i])
                best = (f, float((sv[cuts[i]] + sv[cuts[i] + 1]) / 2.0))
        return best

    def leaf(idx):
        tot = stats[idx].sum(axis=0)
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_fn(tot[0], tot[1]))
        return node

    def grow(idx, depth):
        if (max_depth is not None and depth >= max_depth) \
                or idx.shape[0] < min_samples_split:
            return leaf(idx)
        found = scan(idx)
        if found is None:
            return leaf(idx)
        f, thr = found
        go_left = X[idx, f] < thr
        node = len(feature)
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(n), 0)
    return _ValueTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )


def _fit_residual_tree(X, residual, newton_scale, learning_rate, tree_params):
    """Variance-reduction structure on the residuals; leaves take the
    Newton step scale * sum(r) / sum(|r|(1-|r|)), scaled by learning_rate.
    |r|(1-|r|) equals p(1-p) for either indicator value, so the leaf
    denominator is the usual Hessian sum."""
    stats = np.column_stack([residual, np.abs(residual) * (1.0 - np.abs(residual))])

    def gain(sl, _hl, nl, st, _ht, nt):
        sr = st - sl
        nr = nt - nl
        return sl * sl / nl + sr * sr / nr - st * st / nt

    def leaf(s, h):
        return learning_rate * newton_scale * s / h if h > 0 else 0.0

    return _grow_value_tree(X, stats, gain, leaf, tree_params.max_depth,
                            tree_params.min_samples_split,
                            tree_params.min_samples_leaf)


def _fit_second_order_tree(X, g, h, lam, gamma, min_child_weight,
                           learning_rate, tree_params):
    """Gain-based structure on (gradient, Hessian) sums; leaves take
    -G/(H+lambda) scaled by learning_rate."""
    stats = np.column_stack([g, h])

    def gain(gl, hl, _nl, gt, ht, _nt):
        gr = gt - gl
        hr = ht - hl
        dl = hl + lam
        dr = hr + lam
        dt = ht + lam
        parent = gt * gt / dt if dt > 0 else 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = 0.5 * (np.where(dl > 0, gl * gl / np.where(dl > 0, dl, 1.0), 0.0)
                         + np.where(dr > 0, gr * gr / np.where(dr > 0, dr, 1.0), 0.0)
                         - parent) - gamma
        bad = (hl < min_child_weight) | (hr < min_child_weight)
        return np.where(bad, -np.inf, raw)

    def leaf(gt, ht):
        if ht + lam <= 0:
            return 0.0
        return -learning_rate * gt / (ht + lam)

    return _grow_value_tree(X, stats, gain, leaf, tree_params.max_depth,
                            tree_params.min_samples_split,
                            tree_params.min_samples_leaf)


# ---------------------------------------------------------------- boosting


@dataclass(frozen=True)
class GradBoostModel:
    init_raw: np.ndarray  # (C,) log class priors
    rounds: tuple         # of per-class _ValueTree tuples
    learning_rate: float
    n_classes: int


@dataclass(frozen=True)
class RegBoostModel:
    init_raw: np.ndarray
    rounds: tuple
    learning_rate: float
    n_classes: int
    lam: float
    gamma: float
    min_child_weight: float


def _log_priors(y, C):
    counts = np.bincount(y, minlength=C).astype(np.float64)
    return np.log(np.maximum(counts / counts.sum(), 1e-12))


def _boost(X, y, n_rounds, learning_rate, tree_params, fit_round_tree):
    X = as_matrix(X)
    y = as_labels(y)
    if n_rounds < 0:
        raise ValueError("round count must be non-negative")
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError(f"learning_rate must be in (0, 1], got {learning_rate}")
    C = n_classes_of(y)
    n = X.shape[0]
    onehot = np.zeros((n, C))
    onehot[np.arange(n), y] = 1.0
    init = _log_priors(y, C)
    raw = np.tile(init, (n, 1))
    rounds = []
    for _ in range(n_rounds):
        P = softmax(raw)
        trees = []
        for c in range(C):
            tree = fit_round_tree(X, onehot[:, c], P[:, c], C)
            raw[:, c] += tree.predict(X)
            trees.append(tree)
        rounds.append(tuple(trees))
    return init, tuple(rounds), C


def fit_gradient_boosting(X, y, n_rounds: int, learning_rate: float = 0.1,
                          tree_params: TreeParams = TreeParams(max_depth=3),
                          seed: int = 0) -> GradBoostModel:
    """Multinomial-deviance boosting from log-prior scores; each round fits
    one variance-reduction regression tree per class to onehot - softmax."""

    def round_tree(X_, ind, p, C):
        return _fit_residual_tree(X_, ind - p, (C - 1.0) / C,
                                  learning_rate, tree_params)

    init, rounds, C = _boost(X, y, n_rounds, learning_rate, tree_params, round_tree)
    return GradBoostModel(init_raw=init, rounds=rounds,
                          learning_rate=learning_rate, n_classes=C)


def fit_regularized_boosting(X, y, n_rounds: int, learning_rate: float = 0.1,
                             lam: float = 1.0, gamma: float = 0.0,
                             min_child_weight: float = 1.0,
                             tree_params: TreeParams = TreeParams(max_depth=3),
                             seed: int = 0) -> RegBoostModel:
    """Second-order boosting: per class, trees split on the regularized
    gain over (g, h) = (p - onehot, p(1-p)) and leaves take -G/(H+lambda)."""
    if lam < 0 or gamma < 0 or min_child_weight < 0:
        raise ValueError("lam, gamma, and min_child_weight must be non-negative")

    def round_tree(X_, ind, p, C):
        return _fit_second_order_tree(X_, p - ind, p * (1.0 - p), lam, gamma,
                                      min_child_weight, learning_rate,
                                      tree_params)

    init, rounds, C = _boost(X, y, n_rounds, learning_rate, tree_params, round_tree)
    return RegBoostModel(init_raw=init, rounds=rounds,
                         learning_rate=learning_rate, n_classes=C,
                         lam=lam, gamma=gamma, min_child_weight=min_child_weight)


def _boost_raw(model, X) -> np.ndarray:
    X = as_matrix(X)
    raw = np.tile(model.init_raw, (X.shape[0], 1))
    for trees in model.rounds:
        for c, tree in enumerate(trees):
            raw[:, c] += tree.predict(X)
    return raw


def predict_proba_boosting(model, X) -> np.ndarray:
    return softmax(_boost_raw(model, X))


def predict_boosting(model, X) -> np.ndarray:
    return np.argmax(predict_proba_boosting(model, X), axis=1)


# ------------------------------------------------------------- estimators


class RandomForest:
    def __init__(self, n_estimators=100, max_depth=None, min_samples_split=2,
                 min_samples_leaf=1, bootstrap=True, seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.seed = seed
        self.model_ = None

    def _tree_params(self):
        return TreeParams(max_depth=self.max_depth,
                          min_samples_split=self.min_samples_split,
                          min_samples_leaf=self.min_samples_leaf)

    def fit(self, X, y):
        self.model_ = fit_random_forest(X, y, self.n_estimators,
                                        self._tree_params(), self.seed,
                                        bootstrap=self.bootstrap)
        return self

    def predict_proba(self, X):
        return predict_proba_forest(self.model_, X)

    def predict(self, X):
        return predict_forest(self.model_, X)


class Bagging(RandomForest):
    def fit(self, X, y):
        self.model_ = fit_bagging(X, y, self.n_estimators, self._tree_params(),
                                  self.seed, bootstrap=self.bootstrap)
        return self


class AdaBoost:
    def __init__(self, n_estimators=100, max_depth=1, seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.seed = seed
        self.model_ = None

    def fit(self, X, y):
        self.model_ = fit_adaboost(X, y, self.n_estimators,
                                   max_depth=self.max_depth, seed=self.seed)
        return self

    def predict_proba(self, X):
        return predict_proba_adaboost(self.model_, X)

    def predict(self, X):
        return predict_adaboost(self.model_, X)


class GradientBoosting:
    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3, seed=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.seed = seed
        self.model_ = None

    def fit(self, X, y):
        self.model_ = fit_gradient_boosting(
            X, y, self.n_estimators, self.learning_rate,
            TreeParams(max_depth=self.max_depth), self.seed)
        return self

    def predict_proba(self, X):
        return predict_proba_boosting(self.model_, X)

    def predict(self, X):
        return predict_boosting(self.model_, X)


class RegularizedBoosting:
    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3,
                 lam=1.0, gamma=0.0, min_child_weight=1.0, seed=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.lam = lam
        self.gamma = gamma
        self.min_child_weight = min_child_weight
        self.seed = seed
        self.model_ = None

    def fit(self, X, y):
        self.model_ = fit_regularized_boosting(
            X, y, self.n_estimators, self.learning_rate, self.lam, self.gamma,
            self.min_child_weight, TreeParams(max_depth=self.max_depth),
            self.seed)
        return self

    def predict_proba(self, X):
        return predict_proba_boosting(self.model_, X)

    def predict(self, X):
        return predict_boosting(self.model_, X)
