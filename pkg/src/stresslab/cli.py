"""Command-line entry point.

Subcommands:
  run            execute an experiment config and write all outputs
  report         print the result tables for a saved report.json
  compare        diff two saved reports model by model
  figures        regenerate the comparison-figure CSV from a report
  validate-data  load, impute, and deduplicate a CSV, then print a summary

Exit codes: 0 success, 2 bad config or arguments, 3 data problems,
4 runtime failures. The master seed resolves as: --seed flag, then the
STRESSLAB_SEED environment variable, then the config file, then 42.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .dataio import (EmptyDatasetError, SchemaError, StratificationError,
                     UnimputableColumnError)
from .pipeline import (ENSEMBLE_NAMES, MODEL_NAMES, REPORT_SCHEMA_VERSION,
                       ArtifactError, ConfigError, StageError,
                       dataset_figure_key, figure_csv_text, load_config,
                       prepare_dataset, run_experiment, tables_markdown,
                       write_outputs)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_DATA_ERRORS = (SchemaError, EmptyDatasetError, UnimputableColumnError,
                StratificationError, FileNotFoundError)


def resolve_seed(flag_value):
    """Flag beats environment; returns None when neither is set so the
    config file's own seed (default 42) applies."""
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get("STRESSLAB_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"STRESSLAB_SEED must be an integer, got {env!r}")


def _load_report(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            report = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"report not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}")
    version = report.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise ConfigError(
            f"{path} has report schema version {version}; this build reads "
            f"version {REPORT_SCHEMA_VERSION}")
    return report


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args.seed)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if args.quick:
        cfg = replace(cfg, quick=True)
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = replace(cfg, n_jobs=args.jobs)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    result = run_experiment(cfg, csv_path=args.data)
    paths = write_outputs(result, cfg.output_dir)
    print(f"wrote {paths['report']}")
    print(f"wrote {paths['tables']}")
    print(f"wrote {paths['figures']}")
    print(f"wrote {paths['artifact']}")
    best = result.report["best_overall"]
    print(f"best_model={best['model']} config={best['config']} "
          f"accuracy={best['test_accuracy_percent']:.3f}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = _load_report(args.report)
    sys.stdout.write(tables_markdown(report))
    return EXIT_OK


def cmd_compare(args) -> int:
    a = _load_report(args.report_a)
    b = _load_report(args.report_b)
    name_a = a["dataset"]["name"]
    name_b = b["dataset"]["name"]
    if name_a != name_b:
        print(f"warning: comparing different datasets: "
              f"{name_a!r} vs {name_b!r}")
    print(f"# Comparison: {name_a} vs {name_b}")
    print()
    print("| Model | A config | A acc | B config | B acc | delta (B-A) |")
    print("| --- | --- | --- | --- | --- | --- |")

    def row(name, cfg_a, acc_a, cfg_b, acc_b):
        delta = acc_b - acc_a
        print(f"| {name} | {cfg_a} | {100 * acc_a:.3f} | {cfg_b} "
              f"| {100 * acc_b:.3f} | {100 * delta:+.3f} |")

    for model in MODEL_NAMES:
        ca = a["best_config_per_model"].get(model)
        cb = b["best_config_per_model"].get(model)
        if ca is None or cb is None:
            continue
        row(model, ca, a["base_models"][model][ca]["test"]["accuracy"],
            cb, b["base_models"][model][cb]["test"]["accuracy"])
    for name in ENSEMBLE_NAMES:
        if name not in a["ensembles"] or name not in b["ensembles"]:
            continue
        row(name,
            a["experiment_config"]["view_policy"],
            a["ensembles"][name]["test"]["accuracy"],
            b["experiment_config"]["view_policy"],
            b["ensembles"][name]["test"]["accuracy"])
    return EXIT_OK


def cmd_figures(args) -> int:
    report = _load_report(args.report)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{dataset_figure_key(report)}_comparison.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(figure_csv_text(report))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_validate_data(args) -> int:
    cfg = load_config(args.config)
    dataset, stats = prepare_dataset(cfg, args.data)
    print(f"dataset: {cfg.descriptor.name}")
    for key in ("rows_loaded", "missing_cells_imputed",
                "duplicate_rows_removed", "rows_after_cleaning",
                "feature_count", "class_count"):
        print(f"{key}: {stats[key]}")
    counts = {}
    for lbl in dataset.labels:
        counts[int(lbl)] = counts.get(int(lbl), 0) + 1
    for idx, name in enumerate(dataset.label_names):
        print(f"class {name!r}: {counts.get(idx, 0)} rows")
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stresslab",
        description="Stress-classification experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config end to end")
    run.add_argument("--config", required=True, help="experiment JSON path")
    run.add_argument("--data", help="CSV path, overrides dataset.csv_path")
    run.add_argument("--out", help="output directory, overrides output_dir")
    run.add_argument("--seed", type=int, help="master seed override")
    run.add_argument("--quick", action="store_true",
                     help="small grids and fewer folds; not the full protocol")
    run.add_argument("--jobs", type=int, help="parallel worker processes")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="print tables for a saved report")
    rep.add_argument("report", help="path to report.json")
    rep.set_defaults(func=cmd_report)

    cmp_ = sub.add_parser("compare", help="diff two saved reports")
    cmp_.add_argument("report_a", help="baseline report.json")
    cmp_.add_argument("report_b", help="candidate report.json")
    cmp_.set_defaults(func=cmd_compare)

    fig = sub.add_parser("figures", help="regenerate figure CSVs from a report")
    fig.add_argument("report", help="path to report.json")
    fig.add_argument("--out", default="figures", help="output directory")
    fig.set_defaults(func=cmd_figures)

    val = sub.add_parser("validate-data",
                         help="check a CSV loads and cleans under a config")
    val.add_argument("--config", required=True, help="experiment JSON path")
    val.add_argument("--data", help="CSV path, overrides dataset.csv_path")
    val.set_defaults(func=cmd_validate_data)

    return parser


def _classify(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, _DATA_ERRORS):
        return EXIT_DATA
    return EXIT_RUNTIME


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return _classify(e.original)
    except (ConfigError,) + _DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return _classify(e)
    except ArtifactError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # anything unplanned is a runtime failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
