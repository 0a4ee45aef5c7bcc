"""
End-to-end experiment in one sitting
====================================

Synthesizes a survey-shaped CSV, runs the whole pipeline on it (clean,
scale, select, project, tune six classifiers, build five ensembles), and
prints the comparison the report is built from.

The CLI equivalent, given a JSON config pointing at the same CSV:

    stresslab run --config experiment.json --out results/
"""

import tempfile
from pathlib import Path

from stresslab.dataio import DatasetDescriptor
from stresslab.pipeline import ExperimentConfig, run_experiment, write_outputs
from stresslab.synthdata import make_informative, write_csv

workdir = Path(tempfile.mkdtemp(prefix="stresslab-demo-"))

# 600 synthetic respondents, 10 questionnaire items of which 3 actually
# carry the stress signal, 3 stress levels.
X, y, informative = make_informative(600, 10, 3, 3, separation=4.0, seed=7)
csv_path = workdir / "survey.csv"
write_csv(csv_path, X, y)
print(f"wrote {csv_path} (informative columns: {informative.tolist()})")

# quick=True shrinks the hyperparameter grids so the demo finishes in
# seconds; drop it to run the full grids.
cfg = ExperimentConfig(
    descriptor=DatasetDescriptor(name="demo-survey",
                                 target_column="stress_level"),
    csv_path=str(csv_path),
    seed=42,
    quick=True,
    eval_folds=5,
    configs=("original", "normalized", "kbest", "pca95"),
)

result = run_experiment(cfg)
report = result.report

print()
print("best feature configuration per model (by cross-validated accuracy):")
for model, vid in report["best_config_per_model"].items():
    test_acc = report["base_models"][model][vid]["test"]["accuracy"]
    print(f"  {model:22s} {vid:10s} test accuracy {test_acc:.4f}")

print()
print("ensembles over those tuned members:")
for name, block in report["ensembles"].items():
    print(f"  {name:22s} test accuracy {block['test']['accuracy']:.4f}")

best = report["best_overall"]
print()
print(f"best overall: {best['model']} ({best['config']}) "
      f"at {best['test_accuracy_percent']:.3f}%")

# write_outputs drops report.json, tables.md, the binary artifact, and a
# comparison CSV next to each other.
paths = write_outputs(result, str(workdir / "results"))
for kind, path in paths.items():
    print(f"{kind}: {path}")
