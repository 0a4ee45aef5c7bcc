"""End-to-end experiment orchestration.

Wires the full protocol: load and clean a CSV, stratified 75/25 split,
fit the preprocessing views on training rows only, grid-search every base
model on every view, evaluate on the held-out split, then build and
evaluate the voting and stacking combiners. Also owns the experiment
config file format, the report/table/figure emission, and the versioned
binary artifact container.

Every random decision derives from the single master seed, so a repeated
run produces byte-identical report and artifact files.
"""

from __future__ import annotations

import hashlib
import json
import pickle
import platform
import struct
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dataio import (Dataset, DatasetDescriptor, SplitIndices,
                     impute_missing, load_csv_dataset, remove_duplicates,
                     stratified_split)
from .decomp import PcaModel, apply_pca, fit_pca
from .ensemble import (MemberPipeline, VotingEnsemble, compute_member_weights,
                       fit_stacking, member_cv_accuracies, predict_stacking,
                       predict_voting)
from .featsel import (SelectionMask, anova_f_scores, eliminate_to, rfe_cv,
                      select_top_k, tune_k_by_cv)
from .metrics import MetricReport, evaluate
from .modelselect import (CandidateResult, ParamGrid, SearchResult,
                          stratified_kfold)
from .preprocess import ScalerParams, apply_minmax, fit_minmax
from .svm import KernelSvm
from .tree_ensembles import (AdaBoost, Bagging, GradientBoosting,
                             RandomForest, RegularizedBoosting)
from .util import as_labels, as_matrix, derive_seed

VIEW_IDS = ("original", "normalized", "kbest", "rfecv", "pca90", "pca95", "pca99")
ALG1_CHAIN = "alg1_chain"
PCA_TARGETS = {"pca90": 0.90, "pca95": 0.95, "pca99": 0.99, ALG1_CHAIN: 0.95}

MODEL_NAMES = ("random_forest", "bagging", "adaboost", "gradient_boosting",
               "regularized_boosting", "svm")

ENSEMBLE_NAMES = ("hard_voting", "soft_voting", "weighted_hard_voting",
                  "weighted_soft_voting", "stacking")

DEFAULT_GRIDS = {
    "random_forest": {"n_estimators": [100, 200], "max_depth": [1, 3, 5]},
    "bagging": {"n_estimators": [100, 200], "max_depth": [1, 3, 5]},
    "adaboost": {"n_estimators": [100, 200], "max_depth": [1, 3]},
    "gradient_boosting": {"n_estimators": [100, 200], "learning_rate": [0.1, 0.3],
                          "max_depth": [1, 3, 5]},
    "regularized_boosting": {"n_estimators": [100, 200], "learning_rate": [0.1, 0.3],
                             "max_depth": [1, 3, 5], "lam": [0, 1], "gamma": [0]},
    "svm": [{"C": [0.1, 1, 10, 100], "kernel": ["linear"]},
            {"C": [0.1, 1, 10, 100], "kernel": ["rbf"],
             "gamma": ["scale", 0.01, 0.1, 1]}],
}

# deliberately tiny: CI-scale runs, documented as not reproducing paper numbers
QUICK_GRIDS = {
    "random_forest": {"n_estimators": [25], "max_depth": [5]},
    "bagging": {"n_estimators": [25], "max_depth": [5]},
    "adaboost": {"n_estimators": [25], "max_depth": [1]},
    "gradient_boosting": {"n_estimators": [25], "learning_rate": [0.1],
                          "max_depth": [3]},
    "regularized_boosting": {"n_estimators": [25], "learning_rate": [0.1],
                             "max_depth": [3], "lam": [1], "gamma": [0]},
    "svm": [{"C": [1, 10], "kernel": ["rbf"], "gamma": ["scale"]}],
}

# §IV.C-style overlay values, carried verbatim as previously reported
PRIOR_REPORTED = {
    "dataset1": (("hybrid ensemble (prior work)", 92.41),
                 ("random forest (prior work)", 88.0)),
    "dataset2": (("svm (prior work)", 95.0),
                 ("logistic regression (prior work)", 99.0)),
}

REPORT_SCHEMA_VERSION = 1
ARTIFACT_MAGIC = b"SLAB"
ARTIFACT_VERSION = 1


class StageError(RuntimeError):
    """Wraps a failure with the experiment stage it happened in."""

    def __init__(self, stage, original):
        super().__init__(f"[{stage}] {original}")
        self.stage = stage
        self.original = original


class ArtifactError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ views


@dataclass(frozen=True)
class FittedView:
    """A fitted preprocessing chain: scaler, masks, optional projection."""

    view_id: str
    scaler: ScalerParams = None
    kbest_mask: SelectionMask = None
    rfecv_mask: SelectionMask = None
    pca: PcaModel = None

    def transform(self, X) -> np.ndarray:
        Z = as_matrix(X)
        if self.scaler is not None:
            Z = apply_minmax(Z, self.scaler)
        if self.kbest_mask is not None:
            Z = self.kbest_mask.apply(Z)
        if self.rfecv_mask is not None:
            Z = self.rfecv_mask.apply(Z)
        if self.pca is not None:
            Z = apply_pca(Z, self.pca)
        return Z

    @property
    def output_dim(self) -> int:
        if self.pca is not None:
            return self.pca.n_components
        if self.rfecv_mask is not None:
            return self.rfecv_mask.kept_count
        if self.kbest_mask is not None:
            return self.kbest_mask.kept_count
        if self.scaler is not None:
            return self.scaler.col_min.shape[0]
        return -1  # original view: whatever width comes in

    def kept_original_columns(self):
        """Original column indices surviving the mask steps, or None."""
        if self.kbest_mask is None and self.rfecv_mask is None:
            return None
        if self.kbest_mask is None:
            return np.flatnonzero(self.rfecv_mask.kept)
        cols = np.flatnonzero(self.kbest_mask.kept)
        if self.rfecv_mask is None:
            return cols
        return cols[self.rfecv_mask.kept]


@dataclass(frozen=True)
class ViewRecipe:
    """Unfitted view description; fit() tunes whatever is not pinned.

    A recipe with fixed_k / fixed_rfe_count pinned re-estimates scaler
    statistics, score rankings, and projections on its training rows but
    keeps the tuned hyperparameters, which is what out-of-fold member
    refits need.
    """

    view_id: str
    seed: int = 0
    tune_folds: int = 10
    rfe_folds: int = 5
    rfe_step: int = 1
    fixed_k: int = None
    fixed_rfe_count: int = None

    def __post_init__(self):
        if self.view_id not in VIEW_IDS + (ALG1_CHAIN,):
            raise ValueError(f"unknown view id {self.view_id!r}")

    def fit(self, X, y) -> FittedView:
        X = as_matrix(X)
        y = as_labels(y)
        vid = self.view_id
        if vid == "original":
            return FittedView(vid)
        scaler = fit_minmax(X)
        Z = apply_minmax(X, scaler)
        kbest_mask = None
        rfecv_mask = None
        pca = None
        if vid in ("kbest", ALG1_CHAIN):
            if self.fixed_k is not None:
                k = self.fixed_k
            else:
                k = tune_k_by_cv(Z, y, folds=self.tune_folds,
                                 seed=derive_seed(self.seed, "tune-k"))
            kbest_mask = select_top_k(anova_f_scores(Z, y), k)
            Z = kbest_mask.apply(Z)
        if vid in ("rfecv", ALG1_CHAIN):
            if self.fixed_rfe_count is not None:
                rfecv_mask = eliminate_to(Z, y, self.fixed_rfe_count,
                                          step=self.rfe_step,
                                          seed=derive_seed(self.seed, "rfe"))
            else:
                rfecv_mask = rfe_cv(Z, y, folds=self.rfe_folds,
                                    step=self.rfe_step,
                                    seed=derive_seed(self.seed, "rfe"))
            Z = rfecv_mask.apply(Z)
        if vid in PCA_TARGETS:
            pca = fit_pca(Z, PCA_TARGETS[vid])
        return FittedView(vid, scaler=scaler, kbest_mask=kbest_mask,
                          rfecv_mask=rfecv_mask, pca=pca)


def frozen_recipe(recipe: ViewRecipe, view: FittedView) -> ViewRecipe:
    """Pin the tuned widths of a fitted view onto its recipe."""
    return replace(
        recipe,
        fixed_k=view.kbest_mask.kept_count if view.kbest_mask else recipe.fixed_k,
        fixed_rfe_count=(view.rfecv_mask.kept_count
                         if view.rfecv_mask else recipe.fixed_rfe_count),
    )


# ----------------------------------------------------------------- config


_DATASET_KEYS = {"name", "csv_path", "target_column", "expected_rows",
                 "expected_feature_count", "class_labels", "feature_columns"}
_CONFIG_KEYS = {"dataset", "seed", "test_fraction", "tune_folds", "eval_folds",
                "view_policy", "selection_protocol", "include_alg1_chain",
                "configs", "grids", "output_dir", "quick", "n_jobs",
                "impute_strategy"}


@dataclass(frozen=True)
class ExperimentConfig:
    descriptor: DatasetDescriptor
    csv_path: str = None
    seed: int = 42
    test_fraction: float = 0.25
    tune_folds: int = 10
    eval_folds: int = 5
    view_policy: str = "per_member_best"
    selection_protocol: str = "in_fold"
    include_alg1_chain: bool = False
    configs: tuple = None          # subset of view ids, None = all
    grids: dict = field(default_factory=dict)
    output_dir: str = "stresslab-output"
    quick: bool = False
    n_jobs: int = 1
    impute_strategy: str = "median"

    def __post_init__(self):
        if self.view_policy not in ("per_member_best", "shared"):
            raise ConfigError(f"unknown view_policy {self.view_policy!r}")
        if self.selection_protocol not in ("in_fold", "fixed_upfront"):
            raise ConfigError(
                f"unknown selection_protocol {self.selection_protocol!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction out of range: {self.test_fraction}")
        if self.tune_folds < 2 or self.eval_folds < 2:
            raise ConfigError("fold counts must be at least 2")
        for name in self.grids:
            if name not in MODEL_NAMES:
                raise ConfigError(f"grid for unknown model {name!r}")
        if self.configs is not None:
            for vid in self.configs:
                if vid not in VIEW_IDS + (ALG1_CHAIN,):
                    raise ConfigError(f"unknown view id {vid!r} in configs")

    @property
    def view_ids(self) -> tuple:
        if self.configs is not None:
            return tuple(self.configs)
        ids = VIEW_IDS
        if self.include_alg1_chain:
            ids = ids + (ALG1_CHAIN,)
        return ids

    @property
    def effective_tune_folds(self) -> int:
        return 3 if self.quick else self.tune_folds

    def grid_for(self, model: str) -> ParamGrid:
        if model in self.grids:
            return ParamGrid(self.grids[model])
        base = QUICK_GRIDS if self.quick else DEFAULT_GRIDS
        return ParamGrid(base[model])

    def as_dict(self) -> dict:
        d = self.descriptor
        return {
            "dataset": {
                "name": d.name,
                "csv_path": self.csv_path,
                "target_column": d.target_column,
                "expected_rows": d.expected_rows,
                "expected_feature_count": d.expected_feature_count,
                "class_labels": list(d.class_labels),
                "feature_columns": list(d.feature_columns),
            },
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "tune_folds": self.tune_folds,
            "eval_folds": self.eval_folds,
            "view_policy": self.view_policy,
            "selection_protocol": self.selection_protocol,
            "include_alg1_chain": self.include_alg1_chain,
            "configs": list(self.configs) if self.configs is not None else None,
            "grids": self.grids,
            "output_dir": self.output_dir,
            "quick": self.quick,
            "n_jobs": self.n_jobs,
            "impute_strategy": self.impute_strategy,
        }


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("experiment config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "dataset" not in raw:
        raise ConfigError("config is missing the 'dataset' block")
    ds = raw["dataset"]
    if not isinstance(ds, dict):
        raise ConfigError("'dataset' must be a JSON object")
    unknown = set(ds) - _DATASET_KEYS
    if unknown:
        raise ConfigError(f"unknown dataset keys: {sorted(unknown)}")
    if "target_column" not in ds:
        raise ConfigError("dataset block is missing 'target_column'")
    descriptor = DatasetDescriptor(
        name=ds.get("name", "dataset"),
        target_column=ds["target_column"],
        expected_rows=int(ds.get("expected_rows", 0)),
        expected_feature_count=int(ds.get("expected_feature_count", 0)),
        feature_columns=tuple(ds.get("feature_columns", ())),
        class_labels=tuple(ds.get("class_labels", ())),
    )
    kwargs = {}
    for key in ("seed", "test_fraction", "tune_folds", "eval_folds",
                "view_policy", "selection_protocol", "include_alg1_chain",
                "output_dir", "quick", "n_jobs", "impute_strategy"):
        if key in raw:
            kwargs[key] = raw[key]
    if raw.get("configs") is not None:
        kwargs["configs"] = tuple(raw["configs"])
    if "grids" in raw:
        kwargs["grids"] = dict(raw["grids"])
    try:
        return ExperimentConfig(descriptor=descriptor,
                                csv_path=ds.get("csv_path"), **kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    return config_from_dict(raw)


# ----------------------------------------------------------------- models


class ModelFactory:
    """Picklable factory mapping a model name to its estimator class."""

    _CLASSES = {
        "random_forest": RandomForest,
        "bagging": Bagging,
        "adaboost": AdaBoost,
        "gradient_boosting": GradientBoosting,
        "regularized_boosting": RegularizedBoosting,
        "svm": KernelSvm,
    }

    def __init__(self, name: str):
        if name not in self._CLASSES:
            raise ValueError(f"unknown model {name!r}")
        self.name = name

    def __call__(self, params: dict, seed: int):
        return self._CLASSES[self.name](seed=seed, **params)


# ----------------------------------------------------------------- search


def _eval_task(args):
    factory, params, seed, Xtr, ytr, Xval, yval, n_classes = args
    est = factory(dict(params), seed)
    est.fit(Xtr, ytr)
    rep = evaluate(yval, est.predict(Xval), n_classes=n_classes)
    return rep.accuracy, rep.macro_f1


def _run_tasks(tasks, n_jobs):
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_eval_task, tasks, chunksize=1))
    return [_eval_task(t) for t in tasks]


def _search_on_folds(factory, grid: ParamGrid, fold_data, n_classes,
                     search_seed: int, n_jobs: int) -> SearchResult:
    """Grid search over pre-transformed per-fold matrices. Matches
    modelselect.grid_search semantics (same candidate enumeration, same
    task-seed derivation) while letting view refits be shared."""
    candidates = list(grid)
    tasks = []
    for ci, params in enumerate(candidates):
        for fi, (Xtr, ytr, Xval, yval) in enumerate(fold_data):
            tasks.append((factory, params, derive_seed(search_seed, ci, fi),
                          Xtr, ytr, Xval, yval, n_classes))
    flat = _run_tasks(tasks, n_jobs)
    nf = len(fold_data)
    results = []
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
    return SearchResult(best_params=dict(results[best_i].params),
                        best_mean_accuracy=results[best_i].mean_accuracy,
                        best_index=best_i, candidates=tuple(results), plan=None)


def build_configurations(X_train, y_train, cfg: ExperimentConfig) -> dict:
    """Fit every requested preprocessing view on training rows only."""
    X_train = as_matrix(X_train)
    y_train = as_labels(y_train)
    views = {}
    for vid in cfg.view_ids:
        recipe = view_recipe_for(cfg, vid)
        views[vid] = recipe.fit(X_train, y_train)
    return views


def view_recipe_for(cfg: ExperimentConfig, vid: str) -> ViewRecipe:
    return ViewRecipe(
        view_id=vid,
        seed=derive_seed(cfg.seed, "view", vid),
        tune_folds=cfg.effective_tune_folds,
        rfe_folds=3 if cfg.quick else 5,
    )


def search_all(X_train, y_train, cfg: ExperimentConfig, views: dict) -> dict:
    """Grid-search every (model, view) cell.

    in_fold protocol: one stratified plan per view; the view is refit on
    each fold's training rows once and shared by every model and candidate
    (identical results to refitting per task, since view fitting is
    deterministic in the fold rows). fixed_upfront protocol: the full-train
    fitted view transforms everything once up front.
    """
    X_train = as_matrix(X_train)
    y_train = as_labels(y_train)
    n_classes = int(y_train.max()) + 1
    searches = {m: {} for m in MODEL_NAMES}
    for vid in cfg.view_ids:
        plan = stratified_kfold(y_train, cfg.effective_tune_folds,
                                derive_seed(cfg.seed, "tune", vid))
        if cfg.selection_protocol == "in_fold":
            recipe = view_recipe_for(cfg, vid)
            fold_data = []
            for tr, val in plan.folds:
                fitted = recipe.fit(X_train[tr], y_train[tr])
                fold_data.append((fitted.transform(X_train[tr]), y_train[tr],
                                  fitted.transform(X_train[val]), y_train[val]))
        else:
            Z = views[vid].transform(X_train)
            fold_data = [(Z[tr], y_train[tr], Z[val], y_train[val])
                         for tr, val in plan.folds]
        for model in MODEL_NAMES:
            searches[model][vid] = _search_on_folds(
                ModelFactory(model), cfg.grid_for(model), fold_data, n_classes,
                derive_seed(cfg.seed, "search", vid, model), cfg.n_jobs)
    return searches


def best_view_per_model(searches: dict, view_ids) -> dict:
    out = {}
    for model, per_view in searches.items():
        best = view_ids[0]
        for vid in view_ids:
            if per_view[vid].best_mean_accuracy > per_view[best].best_mean_accuracy:
                best = vid
        out[model] = best
    return out


def shared_best_view(searches: dict, view_ids) -> str:
    """The single view maximizing the mean over models of each model's
    best-candidate CV accuracy."""
    best = view_ids[0]
    best_mean = -np.inf
    for vid in view_ids:
        mean = float(np.mean([searches[m][vid].best_mean_accuracy
                              for m in MODEL_NAMES]))
        if mean > best_mean:
            best_mean = mean
            best = vid
    return best


# -------------------------------------------------------------- experiment


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: dict
    views: dict
    searches: dict
    base_eval: dict          # model -> vid -> MetricReport
    best_views: dict         # model -> vid
    members: dict            # model -> fitted MemberPipeline
    ensembles: dict          # name -> fitted ensemble object
    dataset: Dataset
    split: SplitIndices


def prepare_dataset(cfg: ExperimentConfig, csv_path: str = None) -> tuple:
    """Load, impute, deduplicate. Returns (dataset, cleaning_stats)."""
    path = csv_path or cfg.csv_path
    if not path:
        raise ConfigError("no data path: set dataset.csv_path or pass --data")
    loaded = load_csv_dataset(path, cfg.descriptor)
    n_missing = int(np.isnan(loaded.features).sum())
    imputed = impute_missing(loaded, strategy=cfg.impute_strategy)
    deduped = remove_duplicates(imputed)
    stats = {
        "rows_loaded": loaded.n_rows,
        "missing_cells_imputed": n_missing,
        "duplicate_rows_removed": loaded.n_rows - deduped.n_rows,
        "rows_after_cleaning": deduped.n_rows,
        "feature_count": deduped.n_features,
        "class_count": deduped.n_classes,
    }
    return deduped, stats


def _members_for(cfg, searches, views, best_views) -> tuple:
    if cfg.view_policy == "shared":
        shared = shared_best_view(searches, cfg.view_ids)
        chosen = {m: shared for m in MODEL_NAMES}
    else:
        chosen = dict(best_views)
    members = []
    for model in MODEL_NAMES:
        vid = chosen[model]
        recipe = frozen_recipe(view_recipe_for(cfg, vid), views[vid])
        members.append(MemberPipeline(
            name=model,
            model_factory=ModelFactory(model),
            params=dict(searches[model][vid].best_params),
            seed=derive_seed(cfg.seed, "member", model),
            view_recipe=recipe,
        ))
    return members, chosen


def run_experiment(cfg: ExperimentConfig, csv_path: str = None) -> ExperimentResult:
    """Execute the full protocol; any stage failure carries its stage tag."""

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as e:
            raise StageError(name, e) from e

    dataset, clean_stats = stage("load", prepare_dataset, cfg, csv_path)
    split = stage("split", stratified_split, dataset, cfg.test_fraction,
                  derive_seed(cfg.seed, "split"))
    X_train = dataset.features[split.train_rows]
    y_train = dataset.labels[split.train_rows]
    X_test = dataset.features[split.test_rows]
    y_test = dataset.labels[split.test_rows]
    n_classes = dataset.n_classes

    views = stage("views", build_configurations, X_train, y_train, cfg)
    searches = stage("search", search_all, X_train, y_train, cfg, views)
    best_views = best_view_per_model(searches, cfg.view_ids)

    def evaluate_cells():
        out = {m: {} for m in MODEL_NAMES}
        for model in MODEL_NAMES:
            for vid in cfg.view_ids:
                params = searches[model][vid].best_params
                est = ModelFactory(model)(params,
                                          derive_seed(cfg.seed, "final", model, vid))
                est.fit(views[vid].transform(X_train), y_train)
                pred = est.predict(views[vid].transform(X_test))
                out[model][vid] = evaluate(y_test, pred, n_classes=n_classes)
        return out

    base_eval = stage("evaluate", evaluate_cells)

    def build_ensembles():
        member_specs, chosen = _members_for(cfg, searches, views, best_views)
        accs = member_cv_accuracies(member_specs, X_train, y_train,
                                    folds=cfg.eval_folds,
                                    seed=derive_seed(cfg.seed, "weights"))
        weights = compute_member_weights(accs)
        uniform = np.full(len(member_specs), 1.0 / len(member_specs))
        fitted = [m.fit_member(X_train, y_train) for m in member_specs]

        ensembles = {}
        for mode, w in (("hard", uniform), ("soft", uniform),
                        ("weighted_hard", weights), ("weighted_soft", weights)):
            ms = tuple(replace(fm, member_weight=float(wi), cv_accuracy=float(ai))
                       for fm, wi, ai in zip(fitted, w, accs))
            ensembles[mode + "_voting"] = VotingEnsemble(
                members=ms, mode=mode, n_classes=n_classes)
        ensembles["stacking"] = fit_stacking(member_specs, X_train, y_train,
                                             folds=cfg.eval_folds,
                                             seed=derive_seed(cfg.seed, "stack"))
        ens_eval = {}
        for name, ens in ensembles.items():
            if name == "stacking":
                labels, _ = predict_stacking(ens, X_test)
            else:
                labels, _ = predict_voting(ens, X_test)
            ens_eval[name] = evaluate(y_test, labels, n_classes=n_classes)
        return ensembles, ens_eval, accs, weights, chosen

    ensembles, ens_eval, member_accs, member_weights, chosen_views = \
        stage("ensembles", build_ensembles)

    report = stage("report", assemble_report, cfg, clean_stats, dataset, split,
                   views, searches, best_views, base_eval, ensembles, ens_eval,
                   member_accs, member_weights, chosen_views)

    members = {m.name: m for m in ensembles["stacking"].members}
    return ExperimentResult(config=cfg, report=report, views=views,
                            searches=searches, base_eval=base_eval,
                            best_views=best_views, members=members,
                            ensembles=ensembles, dataset=dataset, split=split)


# ----------------------------------------------------------------- report


def _metric_dict(rep: MetricReport) -> dict:
    return rep.as_dict()


def _search_audit(result: SearchResult) -> dict:
    return {
        "best_params": _jsonable_params(result.best_params),
        "best_mean_cv_accuracy": result.best_mean_accuracy,
        "best_index": result.best_index,
        "candidates": [
            {
                "params": _jsonable_params(c.params),
                "mean_accuracy": c.mean_accuracy,
                "std_accuracy": c.std_accuracy,
                "mean_macro_f1": c.mean_macro_f1,
                "fold_accuracies": [float(a) for a in c.fold_accuracies],
            }
            for c in result.candidates
        ],
    }


def _jsonable_params(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, (np.integer,)):
            v = int(v)
        elif isinstance(v, (np.floating,)):
            v = float(v)
        out[k] = v
    return out


def _view_summary(view: FittedView) -> dict:
    kept = view.kept_original_columns()
    return {
        "output_dim": view.output_dim,
        "normalized": view.scaler is not None,
        "tuned_k": view.kbest_mask.kept_count if view.kbest_mask else None,
        "rfe_kept": view.rfecv_mask.kept_count if view.rfecv_mask else None,
        "pca_components": view.pca.n_components if view.pca else None,
        "pca_cumulative_ratio": (view.pca.cumulative_ratio
                                 if view.pca else None),
        "kept_original_columns": ([int(c) for c in kept]
                                  if kept is not None else None),
    }


def assemble_report(cfg, clean_stats, dataset, split, views, searches,
                    best_views, base_eval, ensembles, ens_eval,
                    member_accs, member_weights, chosen_views) -> dict:
    base_models = {}
    for model in MODEL_NAMES:
        base_models[model] = {
            vid: {
                "cv": {
                    "best_params": _jsonable_params(searches[model][vid].best_params),
                    "mean_accuracy": searches[model][vid].best_mean_accuracy,
                },
                "test": _metric_dict(base_eval[model][vid]),
            }
            for vid in cfg.view_ids
        }

    ensemble_block = {}
    for name in ENSEMBLE_NAMES:
        ens = ensembles[name]
        entry = {
            "test": _metric_dict(ens_eval[name]),
            "members": [
                {
                    "name": m.name,
                    "view": m.view_recipe.view_id,
                    "weight": m.member_weight,
                    "cv_accuracy": m.cv_accuracy,
                }
                for m in ens.members
            ],
        }
        if name == "stacking":
            entry["meta"] = {
                "l2": ens.meta.l2,
                "n_iter": ens.meta.n_iter,
                "dim": ens.meta_dim,
                "oof_folds": ens.oof_folds,
            }
        ensemble_block[name] = entry

    rows = []
    for model in MODEL_NAMES:
        vid = best_views[model]
        rows.append((model, vid, base_eval[model][vid].accuracy))
    for name in ENSEMBLE_NAMES:
        rows.append((name, cfg.view_policy, ens_eval[name].accuracy))
    best_row = max(rows, key=lambda r: r[2])

    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "experiment_config": cfg.as_dict(),
        "dataset": {
            "name": cfg.descriptor.name,
            "target_column": cfg.descriptor.target_column,
            **clean_stats,
            "train_rows": int(split.train_rows.shape[0]),
            "test_rows": int(split.test_rows.shape[0]),
            "class_names": list(dataset.label_names),
        },
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "platform": platform.platform(),
        },
        "view_order": list(cfg.view_ids),
        "views": {vid: _view_summary(views[vid]) for vid in cfg.view_ids},
        "base_models": base_models,
        "best_config_per_model": dict(best_views),
        "member_view_assignment": dict(chosen_views),
        "member_cv_accuracies": {m: float(a) for m, a in
                                 zip(MODEL_NAMES, member_accs)},
        "member_weights": {m: float(w) for m, w in
                           zip(MODEL_NAMES, member_weights)},
        "ensembles": ensemble_block,
        "search_audit": {
            model: {vid: _search_audit(searches[model][vid])
                    for vid in cfg.view_ids}
            for model in MODEL_NAMES
        },
        "best_overall": {
            "model": best_row[0],
            "config": best_row[1],
            "test_accuracy_percent": round(100.0 * best_row[2], 3),
        },
    }


def report_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True, allow_nan=False)
            + "\n").encode("utf-8")


def _pct(v: float) -> str:
    return f"{100.0 * v:.3f}"


def tables_markdown(report: dict) -> str:
    lines = [f"# Results: {report['dataset']['name']}", ""]
    lines += ["## Base models (best configuration per model)", "",
              "| Model | Configuration | Accuracy | F1 Score | Recall | Precision |",
              "| --- | --- | --- | --- | --- | --- |"]
    for model in MODEL_NAMES:
        vid = report["best_config_per_model"][model]
        t = report["base_models"][model][vid]["test"]
        lines.append(
            f"| {model} | {vid} | {_pct(t['accuracy'])} | {_pct(t['macro_f1'])}"
            f" | {_pct(t['macro_recall'])} | {_pct(t['macro_precision'])} |")
    lines += ["", "## Ensembles", "",
              "| Ensemble | View policy | Accuracy | F1 Score | Recall | Precision |",
              "| --- | --- | --- | --- | --- | --- |"]
    policy = report["experiment_config"]["view_policy"]
    for name in ENSEMBLE_NAMES:
        t = report["ensembles"][name]["test"]
        lines.append(
            f"| {name} | {policy} | {_pct(t['accuracy'])} | {_pct(t['macro_f1'])}"
            f" | {_pct(t['macro_recall'])} | {_pct(t['macro_precision'])} |")
    lines += ["", "## Test accuracy per (model, configuration)", "",
              "| Model | Configuration | CV accuracy | Test accuracy |",
              "| --- | --- | --- | --- |"]
    for model in MODEL_NAMES:
        for vid in report["view_order"]:
            cell = report["base_models"][model][vid]
            lines.append(
                f"| {model} | {vid} | {_pct(cell['cv']['mean_accuracy'])}"
                f" | {_pct(cell['test']['accuracy'])} |")
    lines.append("")
    return "\n".join(lines)


def dataset_figure_key(report: dict) -> str:
    """Map a report to the figure family it belongs to."""
    name = report["dataset"]["name"]
    if name in ("dataset1", "dataset2"):
        return name
    rows = report["dataset"].get("rows_loaded")
    if rows == 1100:
        return "dataset1"
    if rows == 843:
        return "dataset2"
    return name


def figure_rows(report: dict) -> list:
    """(label, accuracy_percent, source) rows for the comparison figure."""
    rows = []
    for model in MODEL_NAMES:
        vid = report["best_config_per_model"][model]
        acc = report["base_models"][model][vid]["test"]["accuracy"]
        rows.append((f"{model} ({vid})", 100.0 * acc, "this_run"))
    for name in ENSEMBLE_NAMES:
        acc = report["ensembles"][name]["test"]["accuracy"]
        rows.append((name, 100.0 * acc, "this_run"))
    key = dataset_figure_key(report)
    for label, pct in PRIOR_REPORTED.get(key, ()):
        rows.append((label, pct, "prior_reported"))
    return rows


def figure_csv_text(report: dict) -> str:
    lines = ["label,accuracy_percent,source"]
    for label, pct, source in figure_rows(report):
        lines.append(f"{label},{pct:.3f},{source}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- artifact


def _artifact_blob(payload: dict) -> bytes:
    body = zlib.compress(pickle.dumps(payload, protocol=4), 9)
    head = ARTIFACT_MAGIC + struct.pack("<I", ARTIFACT_VERSION) + body
    return head + hashlib.sha256(head).digest()[:8]


def save_artifact(result: ExperimentResult, path: str) -> None:
    """Single binary file: magic, u32 version, zlib payload, checksum."""
    payload = {
        "config": result.config.as_dict(),
        "report": result.report,
        "views": result.views,
        "best_views": result.best_views,
        "members": result.members,
        "ensembles": result.ensembles,
        "label_names": list(result.dataset.label_names),
        "feature_names": list(result.dataset.feature_names),
    }
    with open(path, "wb") as fh:
        fh.write(_artifact_blob(payload))


@dataclass
class LoadedArtifact:
    config: dict
    report: dict
    views: dict
    best_views: dict
    members: dict
    ensembles: dict
    label_names: list
    feature_names: list


def load_artifact(path: str) -> LoadedArtifact:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:4] != ARTIFACT_MAGIC:
        raise ArtifactError(f"{path} is not a stresslab artifact")
    head, digest = blob[:-8], blob[-8:]
    if hashlib.sha256(head).digest()[:8] != digest:
        raise ArtifactError(f"{path} failed its integrity check")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != ARTIFACT_VERSION:
        raise ArtifactError(
            f"{path} has artifact version {version}; this build reads "
            f"version {ARTIFACT_VERSION}")
    payload = pickle.loads(zlib.decompress(blob[8:-8]))
    return LoadedArtifact(**payload)


# ---------------------------------------------------------------- outputs


def write_outputs(result: ExperimentResult, out_dir: str) -> dict:
    """Write report.json, tables.md, figures CSV, and the artifact file.
    Returns the paths written."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    paths = {
        "report": os.path.join(out_dir, "report.json"),
        "tables": os.path.join(out_dir, "tables.md"),
        "artifact": os.path.join(out_dir, "artifact.slab"),
    }
    with open(paths["report"], "wb") as fh:
        fh.write(report_json_bytes(result.report))
    with open(paths["tables"], "w", encoding="utf-8") as fh:
        fh.write(tables_markdown(result.report))
    key = dataset_figure_key(result.report)
    fig_path = os.path.join(fig_dir, f"{key}_comparison.csv")
    with open(fig_path, "w", encoding="utf-8") as fh:
        fh.write(figure_csv_text(result.report))
    paths["figures"] = fig_path
    save_artifact(result, paths["artifact"])
    return paths
