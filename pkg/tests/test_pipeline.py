"""Experiment orchestration: configs, views, report, figures, artifact.

One small quick-mode experiment is run once per module and shared by the
report/artifact/output tests; everything else works on units.
"""

import json

import numpy as np
import pytest

from stresslab.dataio import DatasetDescriptor, SchemaError
from stresslab.modelselect import ParamGrid
from stresslab.pipeline import (
    ALG1_CHAIN,
    ENSEMBLE_NAMES,
    MODEL_NAMES,
    PCA_TARGETS,
    VIEW_IDS,
    ArtifactError,
    ConfigError,
    ExperimentConfig,
    StageError,
    ViewRecipe,
    _search_on_folds,
    config_from_dict,
    dataset_figure_key,
    figure_csv_text,
    figure_rows,
    frozen_recipe,
    load_artifact,
    load_config,
    prepare_dataset,
    report_json_bytes,
    run_experiment,
    tables_markdown,
    view_recipe_for,
    write_outputs,
)
from stresslab.synthdata import make_informative, write_csv
from stresslab.util import derive_seed


def descriptor(name="synthetic"):
    return DatasetDescriptor(name=name, target_column="stress_level")


@pytest.fixture(scope="module")
def exp(tmp_path_factory):
    root = tmp_path_factory.mktemp("exp")
    X, y, _ = make_informative(120, 6, 3, 3, separation=3.0, seed=17)
    csv = root / "data.csv"
    write_csv(csv, X, y)
    cfg = ExperimentConfig(
        descriptor=descriptor(),
        csv_path=str(csv),
        seed=7,
        quick=True,
        eval_folds=3,
        configs=("original", "normalized", "kbest"),
        output_dir=str(root / "out"),
    )
    return cfg, run_experiment(cfg), root


# ----------------------------------------------------------------- config

def test_config_defaults():
    cfg = config_from_dict({"dataset": {"target_column": "t"}})
    assert cfg.seed == 42
    assert cfg.test_fraction == 0.25
    assert cfg.tune_folds == 10
    assert cfg.eval_folds == 5
    assert cfg.view_policy == "per_member_best"
    assert cfg.selection_protocol == "in_fold"
    assert not cfg.include_alg1_chain
    assert cfg.view_ids == VIEW_IDS
    assert cfg.impute_strategy == "median"


def test_config_alg1_chain_opt_in():
    cfg = config_from_dict({"dataset": {"target_column": "t"},
                            "include_alg1_chain": True})
    assert cfg.view_ids == VIEW_IDS + (ALG1_CHAIN,)


def test_config_rejections():
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_dict({"dataset": {"target_column": "t"}, "foo": 1})
    with pytest.raises(ConfigError, match="unknown dataset keys"):
        config_from_dict({"dataset": {"target_column": "t", "nrows": 3}})
    with pytest.raises(ConfigError, match="dataset"):
        config_from_dict({})
    with pytest.raises(ConfigError, match="target_column"):
        config_from_dict({"dataset": {}})
    with pytest.raises(ConfigError, match="view_policy"):
        config_from_dict({"dataset": {"target_column": "t"},
                          "view_policy": "best"})
    with pytest.raises(ConfigError, match="selection_protocol"):
        config_from_dict({"dataset": {"target_column": "t"},
                          "selection_protocol": "upfront"})
    with pytest.raises(ConfigError, match="test_fraction"):
        config_from_dict({"dataset": {"target_column": "t"},
                          "test_fraction": 1.0})
    with pytest.raises(ConfigError, match="fold"):
        config_from_dict({"dataset": {"target_column": "t"}, "tune_folds": 1})
    with pytest.raises(ConfigError, match="unknown model"):
        config_from_dict({"dataset": {"target_column": "t"},
                          "grids": {"xgboost": {"n_estimators": [5]}}})
    with pytest.raises(ConfigError, match="view id"):
        config_from_dict({"dataset": {"target_column": "t"},
                          "configs": ["original", "pca80"]})


def test_config_quick_mode_and_grids():
    cfg = config_from_dict({"dataset": {"target_column": "t"}, "quick": True,
                            "grids": {"svm": {"C": [1], "kernel": ["linear"]}}})
    assert cfg.effective_tune_folds == 3
    assert len(cfg.grid_for("svm")) == 1          # custom overrides quick
    assert len(cfg.grid_for("adaboost")) == 1     # quick grid
    slow = config_from_dict({"dataset": {"target_column": "t"}})
    assert slow.effective_tune_folds == 10
    assert len(slow.grid_for("svm")) == 20        # 4 linear + 16 rbf


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "nope.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="valid JSON"):
        load_config(str(bad))


def test_config_round_trips_through_dict():
    raw = {"dataset": {"target_column": "t", "name": "d", "csv_path": "x.csv",
                       "expected_rows": 100, "expected_feature_count": 5},
           "seed": 3, "quick": True, "configs": ["normalized", "pca95"]}
    cfg = config_from_dict(raw)
    again = config_from_dict(cfg.as_dict())
    assert again == cfg


# ------------------------------------------------------------------ views

@pytest.fixture(scope="module")
def planted_small():
    return make_informative(60, 5, 2, 3, separation=3.0, seed=5)


def recipe(vid, **kw):
    kw.setdefault("tune_folds", 3)
    kw.setdefault("rfe_folds", 3)
    return ViewRecipe(view_id=vid, seed=11, **kw)


def test_original_view_is_identity(planted_small):
    X, y, _ = planted_small
    view = recipe("original").fit(X, y)
    assert np.array_equal(view.transform(X), X)
    assert view.output_dim == -1
    assert view.kept_original_columns() is None


def test_normalized_view(planted_small):
    X, y, _ = planted_small
    view = recipe("normalized").fit(X, y)
    Z = view.transform(X)
    assert Z.shape == X.shape
    assert Z.min() >= 0.0 and Z.max() <= 1.0
    assert view.output_dim == 5


def test_kbest_view_masks_after_scaling(planted_small):
    X, y, pos = planted_small
    view = recipe("kbest").fit(X, y)
    assert view.kbest_mask is not None and view.pca is None
    Z = view.transform(X)
    assert Z.shape == (60, view.output_dim)
    assert view.output_dim == view.kbest_mask.kept_count
    kept = view.kept_original_columns()
    assert set(pos) >= set() and kept is not None


@pytest.mark.filterwarnings("ignore:SMO stopped")
def test_rfecv_view(planted_small):
    X, y, _ = planted_small
    view = recipe("rfecv").fit(X, y)
    assert view.rfecv_mask is not None and view.kbest_mask is None
    assert view.transform(X).shape[1] == view.rfecv_mask.kept_count


@pytest.mark.parametrize("vid", ["pca90", "pca95", "pca99"])
def test_pca_views_hit_their_targets(planted_small, vid):
    X, y, _ = planted_small
    view = recipe(vid).fit(X, y)
    assert view.pca is not None
    assert view.output_dim == view.pca.n_components
    # target reached unless every component was needed
    assert (view.pca.cumulative_ratio >= PCA_TARGETS[vid]
            or view.pca.n_components == X.shape[1])
    assert view.transform(X).shape == (60, view.pca.n_components)


@pytest.mark.filterwarnings("ignore:SMO stopped")
def test_alg1_chain_composes_all_stages(planted_small):
    X, y, _ = planted_small
    view = recipe(ALG1_CHAIN).fit(X, y)
    assert view.scaler is not None
    assert view.kbest_mask is not None
    assert view.rfecv_mask is not None
    assert view.pca is not None
    # surviving original columns are a subset of the kbest selection
    kept = view.kept_original_columns()
    kbest_cols = np.flatnonzero(view.kbest_mask.kept)
    assert set(kept).issubset(set(kbest_cols))
    # transform output matches the stored projection width
    assert view.transform(X).shape == (60, view.pca.n_components)


def test_unknown_view_id_rejected():
    with pytest.raises(ValueError, match="view id"):
        ViewRecipe(view_id="pca50")


def test_frozen_recipe_pins_tuned_widths(planted_small):
    X, y, _ = planted_small
    rec = recipe("kbest")
    view = rec.fit(X, y)
    pinned = frozen_recipe(rec, view)
    assert pinned.fixed_k == view.kbest_mask.kept_count
    # refit on a subset: same width, no re-tuning
    refit = pinned.fit(X[:40], y[:40])
    assert refit.kbest_mask.kept_count == pinned.fixed_k


@pytest.mark.filterwarnings("ignore:SMO stopped")
def test_frozen_recipe_pins_rfe_count(planted_small):
    X, y, _ = planted_small
    rec = recipe("rfecv")
    view = rec.fit(X, y)
    pinned = frozen_recipe(rec, view)
    assert pinned.fixed_rfe_count == view.rfecv_mask.kept_count
    refit = pinned.fit(X[:40], y[:40])
    assert refit.rfecv_mask.kept_count == pinned.fixed_rfe_count


# ----------------------------------------------------------------- search

class _Const:
    def __init__(self, c):
        self.c = c

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.full(X.shape[0], self.c, dtype=np.int64)


def _const_factory(params, seed):
    return _Const(params["c"])


def _fold_data():
    Xtr = np.zeros((6, 1))
    ytr = np.array([0, 0, 1, 1, 2, 2])
    return [(Xtr, ytr, Xtr, ytr)]


def test_search_on_folds_prefers_accuracy_then_order():
    res = _search_on_folds(_const_factory, ParamGrid({"c": [0, 1, 2]}),
                           _fold_data(), 3, search_seed=0, n_jobs=1)
    assert res.best_index == 0  # all tie at 1/3: earliest wins
    better = _fold_data()
    better[0][1][:] = np.array([1, 1, 1, 1, 0, 2])
    res = _search_on_folds(_const_factory, ParamGrid({"c": [0, 1]}),
                           better, 3, search_seed=0, n_jobs=1)
    assert res.best_index == 1
    assert res.best_params == {"c": 1}


# ------------------------------------------------------------- experiment

def test_stage_error_tags_load_failures(tmp_path):
    cfg = ExperimentConfig(descriptor=descriptor(),
                           csv_path=str(tmp_path / "missing.csv"))
    with pytest.raises(StageError) as ei:
        run_experiment(cfg)
    assert ei.value.stage == "load"
    assert isinstance(ei.value.original, FileNotFoundError)

    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    cfg = ExperimentConfig(descriptor=descriptor(), csv_path=str(bad))
    with pytest.raises(StageError) as ei:
        run_experiment(cfg)
    assert ei.value.stage == "load"
    assert isinstance(ei.value.original, SchemaError)


def test_prepare_dataset_requires_a_path():
    cfg = ExperimentConfig(descriptor=descriptor(), csv_path=None)
    with pytest.raises(ConfigError, match="csv_path"):
        prepare_dataset(cfg)


def test_report_top_level_schema(exp):
    _, result, _ = exp
    report = result.report
    expected = {"schema_version", "experiment_config", "dataset", "environment",
                "view_order", "views", "base_models", "best_config_per_model",
                "member_view_assignment", "member_cv_accuracies",
                "member_weights", "ensembles", "search_audit", "best_overall"}
    assert set(report) == expected
    assert report["schema_version"] == 1
    assert report["view_order"] == ["original", "normalized", "kbest"]
    assert set(report["base_models"]) == set(MODEL_NAMES)
    assert set(report["ensembles"]) == set(ENSEMBLE_NAMES)


def test_report_dataset_block(exp):
    _, result, _ = exp
    d = result.report["dataset"]
    assert d["rows_loaded"] == 120
    assert d["missing_cells_imputed"] == 0
    assert d["duplicate_rows_removed"] == 0
    assert d["rows_after_cleaning"] == 120
    assert d["feature_count"] == 6
    assert d["class_count"] == 3
    assert d["train_rows"] == 90
    assert d["test_rows"] == 30
    assert d["class_names"] == ["0", "1", "2"]


def test_report_views_and_members(exp):
    cfg, result, _ = exp
    report = result.report
    assert report["views"]["original"]["output_dim"] == -1
    assert report["views"]["normalized"]["output_dim"] == 6
    kb = report["views"]["kbest"]
    assert kb["tuned_k"] == kb["output_dim"]
    assert len(kb["kept_original_columns"]) == kb["tuned_k"]
    for model, vid in report["best_config_per_model"].items():
        assert vid in cfg.view_ids
    assert set(report["member_view_assignment"]) == set(MODEL_NAMES)
    weights = report["member_weights"]
    assert sum(weights.values()) == pytest.approx(1.0, abs=1e-9)
    meta = report["ensembles"]["stacking"]["meta"]
    assert meta["dim"] == len(MODEL_NAMES) * 3
    assert meta["oof_folds"] == 3


def test_best_overall_is_the_max_row(exp):
    _, result, _ = exp
    report = result.report
    rows = []
    for model in MODEL_NAMES:
        vid = report["best_config_per_model"][model]
        rows.append((model, vid,
                     report["base_models"][model][vid]["test"]["accuracy"]))
    policy = report["experiment_config"]["view_policy"]
    for name in ENSEMBLE_NAMES:
        rows.append((name, policy, report["ensembles"][name]["test"]["accuracy"]))
    top = max(rows, key=lambda r: r[2])
    bo = report["best_overall"]
    assert bo["test_accuracy_percent"] == pytest.approx(100 * top[2], abs=1e-9)
    assert bo["model"] == top[0]


def test_search_audit_matches_summary(exp):
    _, result, _ = exp
    report = result.report
    audit = report["search_audit"]["svm"]["kbest"]
    cell = report["base_models"]["svm"]["kbest"]["cv"]
    assert audit["best_params"] == cell["best_params"]
    assert audit["best_mean_cv_accuracy"] == cell["mean_accuracy"]
    assert audit["candidates"][audit["best_index"]]["mean_accuracy"] == \
        audit["best_mean_cv_accuracy"]


def test_report_json_bytes_stable_and_valid(exp):
    _, result, _ = exp
    blob = report_json_bytes(result.report)
    assert blob.endswith(b"\n")
    assert json.loads(blob.decode("utf-8")) == result.report
    assert report_json_bytes(result.report) == blob


def test_tables_markdown_contents(exp):
    _, result, _ = exp
    text = tables_markdown(result.report)
    for model in MODEL_NAMES:
        assert f"| {model} |" in text
    for name in ENSEMBLE_NAMES:
        assert f"| {name} |" in text
    # per-cell table: one row per (model, view)
    cell_rows = [ln for ln in text.splitlines()
                 if ln.startswith("|") and "original" in ln]
    assert len(cell_rows) >= len(MODEL_NAMES)


def test_write_outputs_and_artifact_round_trip(exp):
    cfg, result, root = exp
    paths = write_outputs(result, str(root / "out"))
    report_bytes = (root / "out" / "report.json").read_bytes()
    assert report_bytes == report_json_bytes(result.report)
    assert (root / "out" / "tables.md").exists()
    assert paths["figures"].endswith("synthetic_comparison.csv")

    loaded = load_artifact(paths["artifact"])
    assert loaded.report == result.report
    assert loaded.config == cfg.as_dict()
    assert set(loaded.members) == set(MODEL_NAMES)
    assert loaded.label_names == ["0", "1", "2"]
    Xp = result.dataset.features[:5]
    for m in MODEL_NAMES:
        assert np.array_equal(loaded.members[m].predict_proba(Xp),
                              result.members[m].predict_proba(Xp))


def test_artifact_rejects_corruption(exp, tmp_path):
    _, result, root = exp
    blob = (root / "out" / "artifact.slab").read_bytes()

    flipped = bytearray(blob)
    flipped[len(blob) // 2] ^= 0xFF
    p = tmp_path / "tampered.slab"
    p.write_bytes(bytes(flipped))
    with pytest.raises(ArtifactError, match="integrity"):
        load_artifact(str(p))

    p.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(ArtifactError):
        load_artifact(str(p))

    p.write_bytes(b"NOPE" + blob[4:])
    with pytest.raises(ArtifactError, match="not a stresslab artifact"):
        load_artifact(str(p))

    # version bump with a recomputed checksum: version message, not integrity
    import hashlib
    import struct
    head = b"SLAB" + struct.pack("<I", 99) + blob[8:-8]
    p.write_bytes(head + hashlib.sha256(head).digest()[:8])
    with pytest.raises(ArtifactError, match="version 99"):
        load_artifact(str(p))


def test_shared_policy_fixed_upfront(tmp_path):
    X, y, _ = make_informative(96, 5, 2, 3, separation=3.0, seed=23)
    csv = tmp_path / "d.csv"
    write_csv(csv, X, y)
    cfg = ExperimentConfig(
        descriptor=descriptor(),
        csv_path=str(csv),
        seed=9,
        quick=True,
        eval_folds=3,
        view_policy="shared",
        selection_protocol="fixed_upfront",
        configs=("normalized", "pca95"),
    )
    result = run_experiment(cfg)
    assignment = result.report["member_view_assignment"]
    assert len(set(assignment.values())) == 1
    assert result.report["experiment_config"]["selection_protocol"] == \
        "fixed_upfront"
    assert set(result.report["ensembles"]) == set(ENSEMBLE_NAMES)


# ---------------------------------------------------------------- figures

def fake_report(name, rows_loaded):
    return {
        "dataset": {"name": name, "rows_loaded": rows_loaded},
        "best_config_per_model": {m: "v" for m in MODEL_NAMES},
        "base_models": {m: {"v": {"test": {"accuracy": 0.5}}}
                        for m in MODEL_NAMES},
        "ensembles": {e: {"test": {"accuracy": 0.625}} for e in ENSEMBLE_NAMES},
    }


def test_figure_key_mapping():
    assert dataset_figure_key(fake_report("dataset1", 55)) == "dataset1"
    assert dataset_figure_key(fake_report("stress", 1100)) == "dataset1"
    assert dataset_figure_key(fake_report("other", 843)) == "dataset2"
    assert dataset_figure_key(fake_report("mine", 10)) == "mine"


def test_figure_rows_append_priors_only_when_mapped():
    rows = figure_rows(fake_report("dataset1", 10))
    sources = [s for _, _, s in rows]
    assert sources.count("this_run") == len(MODEL_NAMES) + len(ENSEMBLE_NAMES)
    priors = [(l, p) for l, p, s in rows if s == "prior_reported"]
    assert ("hybrid ensemble (prior work)", 92.41) in priors
    assert ("random forest (prior work)", 88.0) in priors

    rows2 = figure_rows(fake_report("mine", 10))
    assert all(s == "this_run" for _, _, s in rows2)


def test_figure_csv_text_format():
    text = figure_csv_text(fake_report("dataset2", 843))
    lines = text.splitlines()
    assert lines[0] == "label,accuracy_percent,source"
    assert lines[1].startswith("random_forest (v),50.000,this_run")
    assert lines[-1] == "logistic regression (prior work),99.000,prior_reported"
    assert text.endswith("\n")


# ------------------------------------------------------------- recipes

def test_view_recipe_for_derives_seed_and_folds():
    cfg = config_from_dict({"dataset": {"target_column": "t"}, "seed": 5,
                            "quick": True})
    rec = view_recipe_for(cfg, "kbest")
    assert rec.seed == derive_seed(5, "view", "kbest")
    assert rec.tune_folds == 3
    assert rec.rfe_folds == 3
    slow = config_from_dict({"dataset": {"target_column": "t"}, "seed": 5})
    assert view_recipe_for(slow, "kbest").tune_folds == 10
    assert view_recipe_for(slow, "rfecv").rfe_folds == 5
