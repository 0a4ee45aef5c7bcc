"""Stress-survey classification: preprocessing views, from-scratch tree
ensembles and kernel SVM, voting and stacking combiners, and a fully
seeded experiment pipeline."""

from .cart import DecisionTree, TreeParams, best_split, gini_impurity
from .dataio import (Dataset, DatasetDescriptor, EmptyDatasetError,
                     SchemaError, SplitIndices, StratificationError,
                     UnimputableColumnError, impute_missing, load_csv_dataset,
                     remove_duplicates, stratified_split)
from .decomp import PcaModel, apply_pca, fit_pca
from .ensemble import (MemberPipeline, StackingEnsemble, VotingEnsemble,
                       compute_member_weights, fit_stacking, fit_voting,
                       member_cv_accuracies, predict_stacking, predict_voting)
from .featsel import (FeatureScores, SelectionMask, anova_f_scores,
                      eliminate_to, rfe_cv, select_top_k, tune_k_by_cv)
from .metrics import MetricReport, accuracy, compute_metrics, confusion, evaluate
from .modelselect import (CandidateResult, FoldPlan, ParamGrid, SearchResult,
                          cross_validate, grid_search, stratified_kfold)
from .pipeline import (ArtifactError, ConfigError, ExperimentConfig,
                       ExperimentResult, FittedView, StageError, ViewRecipe,
                       build_configurations, config_from_dict, load_artifact,
                       load_config, run_experiment, save_artifact,
                       write_outputs)
from .preprocess import MinMaxScaler, ScalerParams, apply_minmax, fit_minmax
from .svm import (BinarySvm, KernelSpec, KernelSvm, MulticlassSvm,
                  fit_platt_sigmoid, fit_svm_multiclass, kernel_eval,
                  predict_proba_multiclass, smo_train_binary)
from .synthdata import make_blobs, make_informative, write_csv
from .tree_ensembles import (AdaBoost, AdaBoostModel, Bagging, ForestModel,
                             GradBoostModel, GradientBoosting, RandomForest,
                             RegBoostModel, RegularizedBoosting, fit_adaboost,
                             fit_bagging, fit_gradient_boosting,
                             fit_random_forest, fit_regularized_boosting)
from .util import derive_seed

__version__ = "1.0.0"

__all__ = [
    "AdaBoost", "AdaBoostModel", "ArtifactError", "Bagging", "BinarySvm",
    "CandidateResult", "ConfigError", "Dataset", "DatasetDescriptor",
    "DecisionTree", "EmptyDatasetError", "ExperimentConfig",
    "ExperimentResult", "FeatureScores", "FittedView", "FoldPlan",
    "ForestModel", "GradBoostModel", "GradientBoosting", "KernelSpec",
    "KernelSvm", "MemberPipeline", "MetricReport", "MinMaxScaler",
    "MulticlassSvm", "ParamGrid", "PcaModel", "RandomForest", "RegBoostModel",
    "RegularizedBoosting", "ScalerParams", "SchemaError", "SearchResult",
    "SelectionMask", "SplitIndices", "StackingEnsemble", "StageError",
    "StratificationError", "TreeParams", "UnimputableColumnError",
    "ViewRecipe", "VotingEnsemble", "accuracy", "anova_f_scores",
    "apply_minmax", "apply_pca", "best_split", "build_configurations",
    "compute_member_weights", "compute_metrics", "config_from_dict",
    "confusion", "cross_validate", "derive_seed", "eliminate_to", "evaluate",
    "fit_adaboost", "fit_bagging", "fit_gradient_boosting", "fit_minmax",
    "fit_pca", "fit_platt_sigmoid", "fit_random_forest",
    "fit_regularized_boosting", "fit_stacking", "fit_svm_multiclass",
    "fit_voting", "gini_impurity", "grid_search", "impute_missing",
    "kernel_eval", "load_artifact", "load_config", "load_csv_dataset",
    "make_blobs", "make_informative", "member_cv_accuracies",
    "predict_proba_multiclass", "predict_stacking", "predict_voting",
    "remove_duplicates", "rfe_cv", "run_experiment", "save_artifact",
    "select_top_k", "smo_train_binary", "stratified_kfold",
    "stratified_split", "tune_k_by_cv", "write_csv", "write_outputs",
]
