"""Confusion matrix and macro-averaged classification metrics.

Macro averaging weights every class equally regardless of its support, so
rare stress levels count as much as common ones. Zero-denominator cells
(a class never predicted, or absent from the truth) score 0 and the report
flags that the convention fired.
"""

from dataclasses import dataclass, field

import numpy as np

from .util import as_labels


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Count matrix with rows = true class, columns = predicted class."""
    y_true = as_labels(y_true)
    y_pred = as_labels(y_pred)
    if y_true.shape[0] != y_pred.shape[0]:
        raise ValueError("y_true and y_pred length mismatch")
    if y_true.size and (y_true.max() >= n_classes or y_pred.max() >= n_classes):
        raise ValueError("label out of range for the declared class count")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y_true, y_pred), 1)
    return m


@dataclass
class MetricReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class_precision: np.ndarray = field(repr=False)
    per_class_recall: np.ndarray = field(repr=False)
    per_class_f1: np.ndarray = field(repr=False)
    zero_division_hit: bool = False

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class_precision": [float(v) for v in self.per_class_precision],
            "per_class_recall": [float(v) for v in self.per_class_recall],
            "per_class_f1": [float(v) for v in self.per_class_f1],
            "zero_division_hit": self.zero_division_hit,
        }


def compute_metrics(m: np.ndarray) -> MetricReport:
    """Accuracy plus per-class and macro precision/recall/F1 from a confusion matrix."""
    m = np.asarray(m, dtype=np.float64)
    total = m.sum()
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    diag = np.diag(m)
    col = m.sum(axis=0)
    row = m.sum(axis=1)

    zero_hit = bool(np.any(col == 0) or np.any(row == 0))
    prec = np.divide(diag, col, out=np.zeros_like(diag), where=col > 0)
    rec = np.divide(diag, row, out=np.zeros_like(diag), where=row > 0)
    pr = prec + rec
    f1 = np.divide(2 * prec * rec, pr, out=np.zeros_like(diag), where=pr > 0)

    return MetricReport(
        accuracy=float(diag.sum() / total),
        macro_precision=float(prec.mean()),
        macro_recall=float(rec.mean()),
        macro_f1=float(f1.mean()),
        per_class_precision=prec,
        per_class_recall=rec,
        per_class_f1=f1,
        zero_division_hit=zero_hit,
    )


def evaluate(y_true, y_pred, n_classes: int) -> MetricReport:
    return compute_metrics(confusion(y_true, y_pred, n_classes))


def accuracy(y_true, y_pred) -> float:
    y_true = as_labels(y_true)
    y_pred = as_labels(y_pred)
    return float(np.mean(y_true == y_pred))
