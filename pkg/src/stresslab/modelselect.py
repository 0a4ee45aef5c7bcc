"""Stratified K-fold plans, cross-validation, and exhaustive grid search.

The estimator protocol used throughout: a *factory* is a callable
``factory(params: dict, seed: int) -> estimator`` returning an unfitted
model with ``fit(X, y)`` and ``predict(X)``. Factories must be importable
top-level objects when ``n_jobs > 1`` (they cross process boundaries).

Every (candidate, fold) task derives its seed as
``derive_seed(master_seed, candidate_index, fold_index)``, so parallel and
serial execution produce bit-identical results.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataio import StratificationError
from .metrics import evaluate
from .util import as_labels, as_matrix, derive_seed

__all__ = ["StratificationError", "FoldPlan", "stratified_kfold",
           "cross_validate", "CandidateResult", "SearchResult", "ParamGrid",
           "grid_search"]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple  # of (train_indices, val_indices) pairs
    k: int
    seed: int

    def validate(self, n_rows: int) -> None:
        """Check validation sets partition all row indices exactly once."""
        seen = np.concatenate([val for _, val in self.folds])
        if len(seen) != n_rows or len(np.unique(seen)) != n_rows:
            raise ValueError("fold validation sets do not partition the rows")


def stratified_kfold(y, k: int, seed: int) -> FoldPlan:
    """Per-class seeded shuffle then round-robin assignment to k folds.

    Keeps each fold's class counts within one sample of the global
    proportions. Every class must have at least k members.
    """
    y = as_labels(y)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    n = y.shape[0]
    classes, counts = np.unique(y, return_counts=True)
    for c, cnt in zip(classes, counts):
        if cnt < k:
            raise StratificationError(
                f"class {int(c)} has {int(cnt)} rows, fewer than k={k}"
            )
    assignment = np.empty(n, dtype=np.int64)
    for c in classes:
        rows = np.flatnonzero(y == c)
        rng = np.random.default_rng(derive_seed(seed, "fold", int(c)))
        rows = rows[rng.permutation(rows.shape[0])]
        assignment[rows] = np.arange(rows.shape[0]) % k
    folds = []
    everything = np.arange(n)
    for f in range(k):
        val = everything[assignment == f]
        train = everything[assignment != f]
        folds.append((train, val))
    return FoldPlan(folds=tuple(folds), k=k, seed=seed)


def _fit_score(est, X, y, train, val):
    est.fit(X[train], y[train])
    pred = est.predict(X[val])
    rep = evaluate(y[val], pred, n_classes=int(y.max()) + 1)
    return rep.accuracy, rep.macro_f1


def cross_validate(factory, X, y, plan: FoldPlan, params=None, seed: int = 0):
    """Fold accuracies for one recipe; any preprocessing refits happen
    inside the factory's estimator so no state crosses folds."""
    X = as_matrix(X)
    y = as_labels(y)
    plan.validate(X.shape[0])
    params = dict(params or {})
    accs = []
    for fi, (train, val) in enumerate(plan.folds):
        est = factory(params, derive_seed(seed, 0, fi))
        acc, _ = _fit_score(est, X, y, train, val)
        accs.append(acc)
    return np.array(accs)


@dataclass(frozen=True)
class CandidateResult:
    params: dict
    fold_accuracies: np.ndarray
    fold_macro_f1: np.ndarray
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float


@dataclass(frozen=True)
class SearchResult:
    best_params: dict
    best_mean_accuracy: float
    best_index: int
    candidates: tuple = field(repr=False)
    plan: FoldPlan = field(repr=False, default=None)


class ParamGrid:
    """Cartesian product of named candidate lists, in declaration order.

    Accepts one mapping or a sequence of mappings; a sequence enumerates
    the union of the sub-grids in order (useful when some parameters only
    apply to certain values of another, like gamma under an rbf kernel).
    """

    def __init__(self, spec):
        if isinstance(spec, dict):
            spec = [spec]
        self._blocks = []
        for block in spec:
            if not block:
                raise ValueError("empty grid block")
            clean = {}
            for name, values in block.items():
                values = list(values)
                if not values:
                    raise ValueError(f"parameter {name!r} has no candidates")
                clean[str(name)] = values
            self._blocks.append(clean)
        if not self._blocks:
            raise ValueError("empty grid")

    def __iter__(self):
        for block in self._blocks:
            names = list(block)
            for combo in itertools.product(*(block[n] for n in names)):
                yield dict(zip(names, combo))

    def __len__(self):
        total = 0
        for block in self._blocks:
            size = 1
            for values in block.values():
                size *= len(values)
            total += size
        return total


def _run_task(args):
    factory, params, seed, X, y, train, val = args
    est = factory(dict(params), seed)
    return _fit_score(est, X, y, train, val)


def grid_search(factory, grid, X, y, k: int = 10, seed: int = 0,
                n_jobs: int = 1, plan: FoldPlan = None) -> SearchResult:
    """Evaluate every candidate on one shared fold plan; winner is the
    highest mean accuracy, ties going to the earliest candidate."""
    X = as_matrix(X)
    y = as_labels(y)
    if not isinstance(grid, ParamGrid):
        grid = ParamGrid(grid)
    candidates = list(grid)
    if not candidates:
        raise ValueError("grid enumerated no candidates")
    if plan is None:
        plan = stratified_kfold(y, k, derive_seed(seed, "folds"))
    plan.validate(X.shape[0])

    tasks = []
    for ci, params in enumerate(candidates):
        for fi, (train, val) in enumerate(plan.folds):
            tasks.append((factory, params, derive_seed(seed, ci, fi),
                          X, y, train, val))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            flat = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        flat = [_run_task(t) for t in tasks]

    results = []
    nf = len(plan.folds)
    for ci, params in enumerate(candidates):
        pairs = flat[ci * nf:(ci + 1) * nf]
        accs = np.array([a for a, _ in pairs])
        f1s = np.array([f for _, f in pairs])
        results.append(CandidateResult(
            params=params,
            fold_accuracies=accs,
            fold_macro_f1=f1s,
            mean_accuracy=float(accs.mean()),
            std_accuracy=float(accs.std()),
            mean_macro_f1=float(f1s.mean()),
        ))

    best_i = 0
    for i, r in enumerate(results):
        if r.mean_accuracy > results[best_i].mean_accuracy:
            best_i = i
    return SearchResult(
        best_params=dict(results[best_i].params),
        best_mean_accuracy=results[best_i].mean_accuracy,
        best_index=best_i,
        candidates=tuple(results),
        plan=plan,
    )
