import warnings

import numpy as np
import pytest

from stresslab.dataio import (DatasetDescriptor, EmptyDatasetError,
                              SchemaError, StratificationError,
                              UnimputableColumnError, impute_missing,
                              load_csv_dataset, remove_duplicates,
                              stratified_split)

DESC = DatasetDescriptor(name="toy", target_column="stress_level")


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_three_row_csv_parses(tmp_path):
    path = write(tmp_path, "a,b,stress_level\n1,2,0\n3,4,1\n5,6,2\n")
    ds = load_csv_dataset(path, DESC)
    assert ds.n_rows == 3 and ds.n_features == 2 and ds.n_classes == 3
    assert ds.feature_names == ("a", "b")
    assert ds.features[1].tolist() == [3.0, 4.0]
    assert ds.labels.tolist() == [0, 1, 2]


def test_unparseable_cell_becomes_missing(tmp_path):
    path = write(tmp_path, "a,stress_level\n1,0\nn/a,1\n")
    ds = load_csv_dataset(path, DESC)
    assert ds.n_rows == 2
    assert np.isnan(ds.features[1, 0])
    assert ds.has_missing()


def test_missing_target_column_is_schema_error(tmp_path):
    path = write(tmp_path, "a,b\n1,2\n")
    with pytest.raises(SchemaError):
        load_csv_dataset(path, DESC)


def test_duplicate_header_rejected(tmp_path):
    path = write(tmp_path, "a,a,stress_level\n1,2,0\n3,4,1\n")
    with pytest.raises(SchemaError):
        load_csv_dataset(path, DESC)


def test_zero_data_rows_rejected(tmp_path):
    path = write(tmp_path, "a,stress_level\n")
    with pytest.raises(EmptyDatasetError):
        load_csv_dataset(path, DESC)


def test_labels_map_ascending_and_numeric_aware(tmp_path):
    path = write(tmp_path, "a,stress_level\n1,10\n2,2\n3,10\n4,2\n")
    ds = load_csv_dataset(path, DESC)
    # numeric labels sort as numbers: 2 < 10
    assert ds.label_names == ("2", "10")
    assert ds.labels.tolist() == [1, 0, 1, 0]


def test_empty_target_rows_dropped_with_warning(tmp_path):
    path = write(tmp_path, "a,stress_level\n1,0\n2,\n3,1\n")
    with pytest.warns(UserWarning, match="empty target"):
        ds = load_csv_dataset(path, DESC)
    assert ds.n_rows == 2


def test_descriptor_count_mismatch_warns_not_errors(tmp_path):
    path = write(tmp_path, "a,b,stress_level\n1,2,0\n3,4,1\n")
    desc = DatasetDescriptor(name="toy", target_column="stress_level",
                             expected_rows=99, expected_feature_count=7)
    with pytest.warns(UserWarning):
        ds = load_csv_dataset(path, desc)
    assert ds.n_rows == 2


def test_unstated_expected_counts_stay_silent(tmp_path):
    path = write(tmp_path, "a,b,stress_level\n1,2,0\n3,4,1\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_csv_dataset(path, DESC)


def test_bom_header_handled(tmp_path):
    p = tmp_path / "bom.csv"
    p.write_bytes(b"\xef\xbb\xbfa,stress_level\n1,0\n2,1\n")
    ds = load_csv_dataset(str(p), DESC)
    assert ds.feature_names == ("a",)


def test_quoted_cells_with_commas(tmp_path):
    path = write(tmp_path, 'a,stress_level\n"1,5",0\n2,1\n')
    ds = load_csv_dataset(path, DESC)
    # "1,5" is not numeric -> missing, but the row structure survives
    assert ds.n_rows == 2
    assert np.isnan(ds.features[0, 0])


def test_explicit_feature_columns_select_and_order(tmp_path):
    path = write(tmp_path, "b,a,stress_level\n1,2,0\n3,4,1\n")
    desc = DatasetDescriptor(name="toy", target_column="stress_level",
                             feature_columns=("a", "b"))
    ds = load_csv_dataset(path, desc)
    assert ds.feature_names == ("a", "b")
    assert ds.features[0].tolist() == [2.0, 1.0]


# ---- imputation


def make_ds(tmp_path, body):
    return load_csv_dataset(write(tmp_path, body), DESC)


def test_impute_median_example(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n1,0\nx,1\n3,0\n")
    out = impute_missing(ds, strategy="median")
    assert out.features[1, 0] == 2.0
    assert not out.has_missing()


def test_impute_mean_and_mode(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n1,0\n1,1\nx,0\n4,1\n")
    assert impute_missing(ds, strategy="mean").features[2, 0] == pytest.approx(2.0)
    assert impute_missing(ds, strategy="mode").features[2, 0] == 1.0


def test_impute_mode_tie_takes_smallest(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n5,0\n5,1\n2,0\n2,1\nx,0\n")
    assert impute_missing(ds, strategy="mode").features[4, 0] == 2.0


def test_impute_without_missing_is_identity(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n1,0\n2,1\n")
    out = impute_missing(ds)
    assert np.array_equal(out.features, ds.features)


def test_impute_is_idempotent(tmp_path):
    ds = make_ds(tmp_path, "a,b,stress_level\n1,x,0\nx,2,1\n3,4,0\n")
    once = impute_missing(ds, strategy="median")
    twice = impute_missing(once, strategy="median")
    assert np.array_equal(once.features, twice.features)


def test_fully_missing_column_names_the_column(tmp_path):
    ds = make_ds(tmp_path, "a,bad,stress_level\n1,x,0\n2,y,1\n")
    with pytest.raises(UnimputableColumnError, match="bad"):
        impute_missing(ds)


def test_unknown_strategy_rejected(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n1,0\n2,1\n")
    with pytest.raises(ValueError):
        impute_missing(ds, strategy="zeros")


# ---- duplicates


def test_exact_duplicates_collapse_to_first(tmp_path):
    ds = make_ds(tmp_path, "a,b,stress_level\n1,2,0\n1,2,0\n3,4,1\n")
    out = remove_duplicates(ds)
    assert out.n_rows == 2
    assert out.features[0].tolist() == [1.0, 2.0]


def test_same_features_different_label_kept(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n1,0\n1,1\n")
    assert remove_duplicates(ds).n_rows == 2


def test_order_preserved_after_dedup(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n5,0\n1,1\n5,0\n2,1\n")
    out = remove_duplicates(ds)
    assert out.features[:, 0].tolist() == [5.0, 1.0, 2.0]


# ---- stratified split


def balanced_ds(tmp_path, per_class=4):
    rows = []
    for c in ("A", "B"):
        for i in range(per_class):
            rows.append(f"{i + (0 if c == 'A' else 100)},{c}")
    return make_ds(tmp_path, "a,stress_level\n" + "\n".join(rows) + "\n")


def test_quarter_split_of_4_and_4(tmp_path):
    ds = balanced_ds(tmp_path)
    s = stratified_split(ds, 0.25, seed=0)
    test_labels = ds.labels[s.test_rows]
    assert len(s.test_rows) == 2
    assert (test_labels == 0).sum() == 1 and (test_labels == 1).sum() == 1


def test_split_deterministic(tmp_path):
    ds = balanced_ds(tmp_path)
    a = stratified_split(ds, 0.25, seed=7)
    b = stratified_split(ds, 0.25, seed=7)
    assert np.array_equal(a.test_rows, b.test_rows)
    assert np.array_equal(a.train_rows, b.train_rows)


def test_split_partitions_rows(tmp_path):
    ds = balanced_ds(tmp_path, per_class=10)
    for seed in range(5):
        s = stratified_split(ds, 0.3, seed=seed)
        both = np.concatenate([s.train_rows, s.test_rows])
        assert len(np.unique(both)) == ds.n_rows


def test_single_row_class_is_stratification_error(tmp_path):
    ds = make_ds(tmp_path, "a,stress_level\n1,0\n2,0\n3,1\n")
    with pytest.raises(StratificationError):
        stratified_split(ds, 0.5, seed=0)


def test_1100_rows_give_275_test_rows(tmp_path):
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 3, 1100)
    labels[:3] = [0, 1, 2]
    body = "a,stress_level\n" + "\n".join(
        f"{i},{labels[i]}" for i in range(1100)) + "\n"
    ds = make_ds(tmp_path, body)
    s = stratified_split(ds, 0.25, seed=42)
    assert len(s.test_rows) == 275
    for c in range(3):
        total = int((ds.labels == c).sum())
        in_test = int((ds.labels[s.test_rows] == c).sum())
        assert abs(in_test - 0.25 * total) <= 1.0


def test_descriptor_rejects_target_in_features():
    with pytest.raises(ValueError):
        DatasetDescriptor(name="x", target_column="t", feature_columns=("t",))
