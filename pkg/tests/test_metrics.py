import numpy as np
import pytest

from stresslab.metrics import (MetricReport, accuracy, compute_metrics,
                               confusion, evaluate)


def test_confusion_counts_every_pair():
    y_true = [0, 0, 1, 2, 2, 2]
    y_pred = [0, 1, 1, 2, 0, 2]
    m = confusion(y_true, y_pred, 3)
    assert m[0, 0] == 1 and m[0, 1] == 1
    assert m[1, 1] == 1
    assert m[2, 2] == 2 and m[2, 0] == 1
    assert m.sum() == 6


def test_confusion_rejects_out_of_range_labels():
    with pytest.raises(ValueError):
        confusion([0, 3], [0, 1], 3)
    with pytest.raises(ValueError):
        confusion([0, 1], [0, 1, 1], 3)


def test_hand_example_matches_to_four_decimals():
    # 3 of 4 correct; per-class F1 = (1, 2/3, 2/3) -> macro 7/9
    rep = evaluate([0, 1, 2, 2], [0, 1, 2, 1], n_classes=3)
    assert rep.accuracy == pytest.approx(0.75, abs=1e-12)
    assert rep.macro_f1 == pytest.approx(0.7778, abs=5e-5)
    assert rep.macro_f1 == pytest.approx(7.0 / 9.0, abs=1e-12)


def test_counting_oracle_small_batch():
    rng = np.random.default_rng(4)
    for _ in range(25):
        c = int(rng.integers(2, 5))
        n = int(rng.integers(5, 40))
        y_true = rng.integers(0, c, n)
        y_pred = rng.integers(0, c, n)
        rep = evaluate(y_true, y_pred, n_classes=c)
        for k in range(c):
            tp = int(np.sum((y_true == k) & (y_pred == k)))
            fp = int(np.sum((y_true != k) & (y_pred == k)))
            fn = int(np.sum((y_true == k) & (y_pred != k)))
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            f = 2 * p * r / (p + r) if p + r else 0.0
            assert rep.per_class_precision[k] == pytest.approx(p, abs=1e-12)
            assert rep.per_class_recall[k] == pytest.approx(r, abs=1e-12)
            assert rep.per_class_f1[k] == pytest.approx(f, abs=1e-12)


def test_zero_division_policy_flags_and_zeroes():
    # class 2 never appears on either side
    rep = evaluate([0, 1], [1, 0], n_classes=3)
    assert rep.per_class_precision[2] == 0.0
    assert rep.per_class_recall[2] == 0.0
    assert rep.per_class_f1[2] == 0.0
    assert rep.zero_division_hit


def test_perfect_prediction():
    rep = evaluate([0, 1, 2], [0, 1, 2], n_classes=3)
    assert rep.accuracy == 1.0
    assert rep.macro_f1 == 1.0
    assert not rep.zero_division_hit


def test_as_dict_round_trips_values():
    rep = evaluate([0, 1, 2, 2], [0, 1, 2, 1], n_classes=3)
    d = rep.as_dict()
    assert d["accuracy"] == rep.accuracy
    assert d["per_class_f1"] == [float(v) for v in rep.per_class_f1]


def test_accuracy_helper():
    assert accuracy([1, 1, 0], [1, 0, 0]) == pytest.approx(2 / 3)


def test_compute_metrics_on_empty_matrix_rejected():
    with pytest.raises(ValueError):
        compute_metrics(np.zeros((0, 0)))
