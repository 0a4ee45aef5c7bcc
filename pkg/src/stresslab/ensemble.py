"""Voting and stacking combiners over heterogeneous member pipelines.

A member couples a *view* (the preprocessing chain it consumes: scaler,
selection mask, optional PCA) with a model and enough information to refit
both from scratch, which stacking's out-of-fold protocol requires. Views
follow a two-object protocol: an unfitted recipe with ``fit(X, y) ->
fitted view``, and the fitted view with ``transform(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import accuracy
from .modelselect import FoldPlan, stratified_kfold
from .util import as_labels, as_matrix, derive_seed, n_classes_of, softmax

_MODES = ("hard", "soft", "weighted_hard", "weighted_soft")


class IdentityView:
    """View recipe and fitted view in one: passes features through."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return as_matrix(X)


@dataclass
class MemberPipeline:
    """One ensemble member: its view, its model, and how to rebuild both."""

    name: str
    model_factory: object          # callable(params, seed) -> unfitted model
    params: dict = field(default_factory=dict)
    seed: int = 0
    view_recipe: object = field(default_factory=IdentityView)
    view: object = None            # fitted view (after fit_member)
    model: object = None           # fitted model (after fit_member)
    member_weight: float = 0.0
    cv_accuracy: float = 0.0

    def build_model(self, seed=None):
        return self.model_factory(dict(self.params),
                                  self.seed if seed is None else seed)

    def fit_member(self, X, y, seed=None) -> "MemberPipeline":
        """Fit a fresh view and model; returns a new fitted member."""
        view = self.view_recipe.fit(X, y)
        model = self.build_model(seed).fit(view.transform(X), y)
        return replace(self, view=view, model=model)

    def predict_proba(self, X) -> np.ndarray:
        if self.model is None:
            raise RuntimeError(f"member {self.name!r} is not fitted")
        return self.model.predict_proba(self.view.transform(X))

    def predict(self, X) -> np.ndarray:
        if self.model is None:
            raise RuntimeError(f"member {self.name!r} is not fitted")
        return self.model.predict(self.view.transform(X))


def compute_member_weights(cv_accuracies) -> np.ndarray:
    """w_i = acc_i / sum(acc); rejects empty and all-zero inputs."""
    acc = np.asarray(cv_accuracies, dtype=np.float64)
    if acc.size == 0:
        raise ValueError("no member accuracies")
    if (acc < 0).any() or (acc > 1).any():
        raise ValueError("accuracies must lie in [0, 1]")
    total = acc.sum()
    if total <= 0:
        raise ValueError("all member accuracies are zero; weights undefined")
    return acc / total


def member_cv_accuracies(members, X, y, folds: int = 5, seed: int = 0,
                         plan: FoldPlan = None) -> list:
    """Internal stratified-CV accuracy per member, on training data only."""
    X = as_matrix(X)
    y = as_labels(y)
    if plan is None:
        plan = stratified_kfold(y, folds, derive_seed(seed, "member-cv"))
    out = []
    for mi, m in enumerate(members):
        scores = []
        for fi, (tr, val) in enumerate(plan.folds):
            fitted = m.fit_member(X[tr], y[tr],
                                  seed=derive_seed(m.seed, "member-cv", mi, fi))
            scores.append(accuracy(y[val], fitted.predict(X[val])))
        out.append(float(np.mean(scores)))
    return out


@dataclass(frozen=True)
class VotingEnsemble:
    members: tuple
    mode: str
    n_classes: int

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown voting mode {self.mode!r}")
        if len(self.members) < 2:
            raise ValueError("voting needs at least 2 members")
        total = sum(m.member_weight for m in self.members)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"member weights sum to {total}, expected 1")


def fit_voting(members, X, y, mode: str, folds: int = 5, seed: int = 0,
               cv_accuracies=None) -> VotingEnsemble:
    """Fit every member on the full training data; weighted modes first
    score members by internal CV (or accept precomputed accuracies)."""
    X = as_matrix(X)
    y = as_labels(y)
    C = n_classes_of(y)
    members = list(members)
    if mode.startswith("weighted"):
        if cv_accuracies is None:
            cv_accuracies = member_cv_accuracies(members, X, y, folds, seed)
        weights = compute_member_weights(cv_accuracies)
    else:
        if cv_accuracies is None:
            cv_accuracies = [0.0] * len(members)
        weights = np.full(len(members), 1.0 / len(members))
    fitted = []
    for m, w, a in zip(members, weights, cv_accuracies):
        fm = m.fit_member(X, y)
        fitted.append(replace(fm, member_weight=float(w), cv_accuracy=float(a)))
    return VotingEnsemble(members=tuple(fitted), mode=mode, n_classes=C)


def predict_voting(e: VotingEnsemble, X):
    """(labels, probabilities). Soft modes average member probabilities;
    hard modes turn each member's label into weight-mass on that class.
    Hard-mode probabilities are normalized vote shares, not calibrated."""
    X = as_matrix(X)
    n = X.shape[0]
    weights = np.array([m.member_weight for m in e.members])
    if e.mode.endswith("soft"):
        P = np.zeros((n, e.n_classes))
        for m, w in zip(e.members, weights):
            P += w * m.predict_proba(X)
    else:
        P = np.zeros((n, e.n_classes))
        for m, w in zip(e.members, weights):
            P[np.arange(n), m.predict(X)] += w
    P = P / P.sum(axis=1, keepdims=True)
    return np.argmax(P, axis=1), P


@dataclass(frozen=True)
class LogisticMeta:
    W: np.ndarray      # (C, D)
    b: np.ndarray      # (C,)
    l2: float
    n_iter: int = 0
    grad_norm: float = 0.0


def meta_loss_grad(W, b, M, onehot, l2: float):
    """Summed cross-entropy + (l2/2)||W||^2 with analytic gradients."""
    P = softmax(M @ W.T + b)
    loss = float(-np.sum(onehot * np.log(np.clip(P, 1e-300, 1.0)))
                 + 0.5 * l2 * np.sum(W * W))
    diff = P - onehot
    return loss, diff.T @ M + l2 * W, diff.sum(axis=0)


def fit_logistic_meta(M, y, l2: float = 1.0, max_iter: int = 500,
                      tol: float = 1e-6) -> LogisticMeta:
    """Full-batch gradient descent with backtracking line search from a
    zero initialization (so the starting probabilities are uniform)."""
    M = as_matrix(M)
    y = as_labels(y)
    C = n_classes_of(y)
    n, d = M.shape
    onehot = np.zeros((n, C))
    onehot[np.arange(n), y] = 1.0
    W = np.zeros((C, d))
    b = np.zeros(C)
    loss, gW, gb = meta_loss_grad(W, b, M, onehot, l2)
    step = 1.0
    it = 0
    gnorm = float(np.sqrt((gW * gW).sum() + (gb * gb).sum()))
    while it < max_iter and gnorm > tol:
        sq = gnorm * gnorm
        accepted = False
        while step >= 1e-15:
            W_new = W - step * gW
            b_new = b - step * gb
            loss_new, gW_new, gb_new = meta_loss_grad(W_new, b_new, M, onehot, l2)
            if loss_new <= loss - 1e-4 * step * sq:
                W, b, loss, gW, gb = W_new, b_new, loss_new, gW_new, gb_new
                accepted = True
                break
            step /= 2.0
        if not accepted:
            break
        step *= 2.0
        gnorm = float(np.sqrt((gW * gW).sum() + (gb * gb).sum()))
        it += 1
    return LogisticMeta(W=W, b=b, l2=l2, n_iter=it, grad_norm=gnorm)


def predict_proba_meta(meta: LogisticMeta, M) -> np.ndarray:
    return softmax(as_matrix(M) @ meta.W.T + meta.b)


@dataclass(frozen=True)
class StackingEnsemble:
    members: tuple
    meta: LogisticMeta
    oof_folds: int
    n_classes: int

    @property
    def meta_dim(self) -> int:
        return len(self.members) * self.n_classes


def fit_stacking(members, X, y, folds: int = 5, seed: int = 0,
                 l2: float = 1.0) -> "StackingEnsemble":
    """Stacking with strictly out-of-fold meta-features.

    Each fold refits every member (view and model, same hyperparameters)
    on the other folds and predicts this fold's rows, so every row's
    K*C meta-features come from models that never saw it. Members are then
    refit on the full training set for inference.
    """
    X = as_matrix(X)
    y = as_labels(y)
    C = n_classes_of(y)
    members = list(members)
    K = len(members)
    if K < 1:
        raise ValueError("stacking needs at least one member")
    plan = stratified_kfold(y, folds, derive_seed(seed, "stack-folds"))
    M = np.zeros((X.shape[0], K * C))
    for fi, (tr, val) in enumerate(plan.folds):
        for ki, m in enumerate(members):
            fitted = m.fit_member(X[tr], y[tr],
                                  seed=derive_seed(m.seed, "stack", fi))
            M[np.ix_(val, np.arange(ki * C, (ki + 1) * C))] = \
                fitted.predict_proba(X[val])
    meta = fit_logistic_meta(M, y, l2=l2)
    final = tuple(m.fit_member(X, y) for m in members)
    return StackingEnsemble(members=final, meta=meta, oof_folds=folds,
                            n_classes=C)


def stacking_meta_features(e: StackingEnsemble, X) -> np.ndarray:
    X = as_matrix(X)
    return np.hstack([m.predict_proba(X) for m in e.members])


def predict_stacking(e: StackingEnsemble, X):
    """(labels, probabilities) from the meta softmax over concatenated
    member probabilities; ties go to the lower class index."""
    P = predict_proba_meta(e.meta, stacking_meta_features(e, X))
    return np.argmax(P, axis=1), P
