"""Loading, cleaning, and splitting of the survey CSV datasets.

The two public survey datasets are plain comma-separated files with a header
row: one respondent per line, Likert/ordinal answers in each column, and one
target column holding the stress level. Kaggle snapshots drift over time, so
a descriptor mismatch on row or column counts is reported as a warning
rather than a hard failure; structural problems (missing target column,
empty file) still raise.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .util import as_matrix


class SchemaError(ValueError):
    """CSV structure does not match the descriptor (e.g. target column missing)."""


class EmptyDatasetError(ValueError):
    """File parsed but contains no data rows."""


class UnimputableColumnError(ValueError):
    """A column has no observed values to impute from."""


class StratificationError(ValueError):
    """A class is too small for the requested stratified partition."""


@dataclass(frozen=True)
class DatasetDescriptor:
    """What we expect the CSV to look like before reading it."""

    name: str
    target_column: str
    expected_rows: int = 0        # 0 = no expectation declared
    expected_feature_count: int = 0
    feature_columns: tuple = ()   # empty means: all non-target columns, file order
    class_labels: tuple = ()      # empty means: infer from data, sorted ascending

    def __post_init__(self):
        if self.target_column in self.feature_columns:
            raise ValueError("target column listed among feature columns")
        if self.expected_feature_count < 0 or self.expected_rows < 0:
            raise ValueError("expected counts cannot be negative")


@dataclass(frozen=True)
class Dataset:
    """Numeric survey matrix with 0..C-1 encoded labels.

    `features` may contain NaN (missing cells) between load and impute;
    all later stages require a fully observed matrix.
    """

    features: np.ndarray
    feature_names: tuple
    labels: np.ndarray
    label_names: tuple
    source: DatasetDescriptor

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def has_missing(self) -> bool:
        return bool(np.isnan(self.features).any())

    def validate(self):
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature count does not match feature_names")
        if self.labels.shape[0] != self.features.shape[0]:
            raise ValueError("label count does not match row count")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError("labels outside 0..C-1")
        return self


@dataclass(frozen=True)
class SplitIndices:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int


def _parse_cell(text: str) -> float:
    """Numeric value, or NaN for anything that does not parse."""
    text = text.strip()
    if not text:
        return np.nan
    try:
        return float(text)
    except ValueError:
        return np.nan


def _sorted_label_values(values):
    """Ascending original target values; numeric order when every value parses."""
    uniq = sorted(set(values))
    try:
        return sorted(uniq, key=lambda v: (float(v), v))
    except ValueError:
        return uniq


def load_csv_dataset(path, desc: DatasetDescriptor) -> Dataset:
    """Read a survey CSV into a Dataset, flagging unparseable cells as missing.

    Labels are mapped to 0..C-1 by ascending original value. Rows whose
    target cell is empty are dropped with a warning; a label that cannot be
    imputed is not a usable training row.
    """
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: file is empty, no header row") from None
            rows = [r for r in reader if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise FileNotFoundError(f"cannot read dataset file {path}: {exc}") from exc

    header = [h.strip() for h in header]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise SchemaError(f"{path}: header has empty or duplicate column names")
    if desc.target_column not in header:
        raise SchemaError(
            f"{path}: target column {desc.target_column!r} not in header {header}"
        )
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")

    target_idx = header.index(desc.target_column)
    if desc.feature_columns:
        missing = [c for c in desc.feature_columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: descriptor feature columns absent: {missing}")
        feature_idx = [header.index(c) for c in desc.feature_columns]
    else:
        feature_idx = [i for i in range(len(header)) if i != target_idx]
    feature_names = tuple(header[i] for i in feature_idx)

    raw_labels = []
    data = []
    dropped = 0
    for r in rows:
        if len(r) < len(header):
            r = r + [""] * (len(header) - len(r))
        raw = r[target_idx].strip()
        if not raw:
            dropped += 1
            continue
        raw_labels.append(raw)
        data.append([_parse_cell(r[i]) for i in feature_idx])
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} rows with an empty target cell")
    if not data:
        raise EmptyDatasetError(f"{path}: no rows with a usable target value")

    if desc.class_labels:
        label_names = tuple(str(v) for v in desc.class_labels)
        unknown = sorted(set(raw_labels) - set(label_names))
        if unknown:
            raise SchemaError(f"{path}: target values not in descriptor classes: {unknown}")
    else:
        label_names = tuple(_sorted_label_values(raw_labels))
    to_index = {v: i for i, v in enumerate(label_names)}
    labels = np.array([to_index[v] for v in raw_labels], dtype=np.int64)

    features = np.array(data, dtype=np.float64)
    n_rows, n_feats = features.shape
    if desc.expected_rows and n_rows != desc.expected_rows:
        warnings.warn(
            f"{desc.name}: descriptor expects {desc.expected_rows} rows, file has {n_rows}"
        )
    if desc.expected_feature_count and n_feats != desc.expected_feature_count:
        warnings.warn(
            f"{desc.name}: descriptor expects {desc.expected_feature_count} features,"
            f" file has {n_feats}"
        )

    ds = Dataset(
        features=features,
        feature_names=feature_names,
        labels=labels,
        label_names=label_names,
        source=desc,
    )
    if ds.n_classes < 2:
        raise SchemaError(f"{path}: only one class present in target column")
    return ds.validate()


def _column_mode(values: np.ndarray) -> float:
    """Most frequent value; ties resolved toward the smallest value."""
    uniq, counts = np.unique(values, return_counts=True)
    return float(uniq[np.argmax(counts)])


def impute_missing(d: Dataset, strategy: str = "median") -> Dataset:
    """Fill NaN cells with a per-column statistic over observed values only."""
    if strategy not in ("median", "mean", "mode"):
        raise ValueError(f"unknown imputation strategy {strategy!r}")
    X = d.features.copy()
    for j in range(X.shape[1]):
        col = X[:, j]
        mask = np.isnan(col)
        if not mask.any():
            continue
        observed = col[~mask]
        if observed.size == 0:
            raise UnimputableColumnError(
                f"column {d.feature_names[j]!r} has no observed values"
            )
        if strategy == "median":
            fill = float(np.median(observed))
        elif strategy == "mean":
            fill = float(np.mean(observed))
        else:
            fill = _column_mode(observed)
        col[mask] = fill
    return replace(d, features=X)


def remove_duplicates(d: Dataset) -> Dataset:
    """Collapse rows with identical feature vector AND label to the first occurrence."""
    seen = {}
    keep = []
    for i in range(d.n_rows):
        key = (d.features[i].tobytes(), int(d.labels[i]))
        if key not in seen:
            seen[key] = i
            keep.append(i)
    if len(keep) == d.n_rows:
        return d
    keep = np.array(keep, dtype=np.int64)
    return replace(d, features=d.features[keep], labels=d.labels[keep])


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(d: Dataset, test_fraction: float, seed: int) -> SplitIndices:
    """Per-class 75/25-style split with a largest-remainder global correction.

    Each class contributes round(class_count * fraction) test rows, then the
    totals are nudged (largest remainder first) until the overall test size is
    round(rows * fraction). No class may end up entirely in the test split.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    y = d.labels
    classes, counts = np.unique(y, return_counts=True)
    for c, n_c in zip(classes, counts):
        if n_c < 2:
            raise StratificationError(
                f"class {d.label_names[int(c)]!r} has a single row; cannot stratify"
            )

    target_total = _round_half_up(d.n_rows * test_fraction)
    ideal = counts * test_fraction
    take = np.array([_round_half_up(v) for v in ideal], dtype=np.int64)
    np.clip(take, 0, counts - 1, out=take)  # keep every class represented in train

    remainder = ideal - take
    diff = target_total - int(take.sum())
    order = np.lexsort((classes, -remainder)) if diff > 0 else np.lexsort((classes, remainder))
    guard = 0
    while diff != 0:
        moved = False
        for pos in order:
            if diff > 0 and take[pos] < counts[pos] - 1:
                take[pos] += 1
                diff -= 1
                moved = True
            elif diff < 0 and take[pos] > 0:
                take[pos] -= 1
                diff += 1
                moved = True
            if diff == 0:
                break
        guard += 1
        if not moved or guard > len(classes) + d.n_rows:
            raise StratificationError("cannot reach the requested test size")

    rng = np.random.default_rng(seed)
    test_rows = []
    for c, t_c in zip(classes, take):
        rows_c = np.flatnonzero(y == c)
        perm = rng.permutation(rows_c)
        test_rows.extend(perm[:t_c].tolist())
    test = np.sort(np.array(test_rows, dtype=np.int64))
    train = np.setdiff1d(np.arange(d.n_rows, dtype=np.int64), test)
    return SplitIndices(train_rows=train, test_rows=test, seed=seed)
