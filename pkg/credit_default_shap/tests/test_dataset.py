"""Tests for CSV ingestion, categorical encoding, auxiliary joins and splits."""
import tempfile
import unittest

import numpy as np
import pandas as pd
from hypothesis import given, settings
from hypothesis import strategies as st

from credit_default_shap.constant import COLUMN_CATEGORICAL, COLUMN_NUMERIC
from credit_default_shap.utils.dataset import (
    SchemaConfig,
    aggregate_join,
    encode_categoricals,
    apply_encoding,
    fit_encoding,
    load_csv,
    split,
    stratified_kfold,
    write_csv,
)
from credit_default_shap.utils.errors import DataIOError, ParseError, SchemaError, SplitError
from credit_default_shap.tests.fixtures import make_dataset, write_text

APPLICATIONS = (
    "SK_ID_CURR,NAME_CONTRACT_TYPE,AMT_CREDIT,DAYS_EMPLOYED,TARGET\n"
    "1,Cash loans,1000.5,-100,0\n"
    "2,Revolving loans,,365243,1\n"
    "3,Cash loans,250,-20,0\n"
    "4,,300,-5,1\n"
)


class TestLoadCsv(unittest.TestCase):
    """Loading the main application table."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with
        self.addCleanup(self.tmp.cleanup)

    def test_column_roles_and_missing_values(self):
        """Text columns become categorical label indices; empty cells and sentinels become NaN."""
        schema = SchemaConfig(categorical_columns=("NAME_CONTRACT_TYPE",))
        data = load_csv(write_text(self.tmp.name, "app.csv", APPLICATIONS), schema)
        self.assertEqual(data.feature_names, ("NAME_CONTRACT_TYPE", "AMT_CREDIT", "DAYS_EMPLOYED"))
        self.assertEqual(data.column_kinds, (COLUMN_CATEGORICAL, COLUMN_NUMERIC, COLUMN_NUMERIC))
        self.assertEqual(data.categories["NAME_CONTRACT_TYPE"], ("Cash loans", "Revolving loans"))
        np.testing.assert_array_equal(data.row_ids, [1, 2, 3, 4])
        np.testing.assert_array_equal(data.target, [0, 1, 0, 1])
        contract = data.column("NAME_CONTRACT_TYPE")
        self.assertEqual(contract[1], 1.0)
        self.assertTrue(np.isnan(contract[3]))
        self.assertTrue(np.isnan(data.column("AMT_CREDIT")[1]))
        self.assertTrue(np.isnan(data.column("DAYS_EMPLOYED")[1]))

    def test_cardinality_rule_marks_low_cardinality_numbers_categorical(self):
        """Numeric columns with few distinct values are categorical under the default threshold."""
        data = load_csv(write_text(self.tmp.name, "app.csv", APPLICATIONS))
        self.assertEqual(data.column_kinds[1], COLUMN_CATEGORICAL)

    def test_default_schema_sentinel_is_missing(self):
        """DAYS_EMPLOYED 365243 is missing under the default schema, whatever the column type."""
        data = load_csv(write_text(self.tmp.name, "app.csv", APPLICATIONS), SchemaConfig())
        days = data.column("DAYS_EMPLOYED")
        self.assertTrue(np.isnan(days[1]))
        self.assertFalse(np.isnan(days[[0, 2, 3]]).any())
        self.assertEqual(data.categories["DAYS_EMPLOYED"], ("-100", "-20", "-5"))

    def test_explicit_categorical_list_requires_numeric_rest(self):
        """Columns outside an explicit categorical list must parse as numbers."""
        path = write_text(self.tmp.name, "app.csv", APPLICATIONS)
        with self.assertRaises(SchemaError):
            load_csv(path, SchemaConfig(categorical_columns=()))
        data = load_csv(path, SchemaConfig(categorical_columns=("NAME_CONTRACT_TYPE",)))
        self.assertEqual(data.categorical_columns, ["NAME_CONTRACT_TYPE"])

    def test_missing_file(self):
        """A missing path is an io error."""
        with self.assertRaises(DataIOError):
            load_csv(f"{self.tmp.name}/absent.csv")

    def test_short_row_reports_line(self):
        """A row with too few fields is a parse error naming its line."""
        path = write_text(self.tmp.name, "bad.csv", "SK_ID_CURR,A,TARGET\n1,2,0\n2,3\n")
        with self.assertRaises(ParseError) as ctx:
            load_csv(path)
        self.assertEqual(ctx.exception.context["row"], 3)

    def test_short_row_missing_feature(self):
        """A row that ends before its last feature field is a parse error, not a missing value."""
        path = write_text(self.tmp.name, "bad.csv", "SK_ID_CURR,TARGET,A\n1,0,2\n2,1\n")
        with self.assertRaises(ParseError) as ctx:
            load_csv(path, SchemaConfig())
        self.assertEqual(ctx.exception.context["row"], 3)
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_long_row_reports_line(self):
        """A row with too many fields is a parse error naming its line."""
        path = write_text(self.tmp.name, "bad.csv", "SK_ID_CURR,A,TARGET\n1,2,0\n2,3,1,9\n")
        with self.assertRaises(ParseError) as ctx:
            load_csv(path)
        self.assertEqual(ctx.exception.context["row"], 3)

    def test_trailing_empty_field_is_missing(self):
        """An empty last field with the right field count is a missing value."""
        path = write_text(self.tmp.name, "ok.csv", "SK_ID_CURR,TARGET,A\n1,0,2\n2,1,\n")
        data = load_csv(path, SchemaConfig(categorical_columns=()))
        self.assertTrue(np.isnan(data.column("A")[1]))

    def test_non_binary_target(self):
        """Target values other than 0 and 1 are rejected."""
        path = write_text(self.tmp.name, "bad.csv", "SK_ID_CURR,A,TARGET\n1,2,0\n2,3,2\n")
        with self.assertRaises(SchemaError):
            load_csv(path)

    def test_duplicate_header(self):
        """Repeated header names are rejected."""
        path = write_text(self.tmp.name, "bad.csv", "SK_ID_CURR,A,A,TARGET\n1,2,3,0\n")
        with self.assertRaises(SchemaError):
            load_csv(path)

    def test_unlabeled_rows_when_target_optional(self):
        """Prediction input without a target column loads with target 0."""
        path = write_text(self.tmp.name, "rows.csv", "SK_ID_CURR,A\n7,1.5\n8,2.5\n")
        data = load_csv(path, SchemaConfig(categorical_columns=(), require_target=False))
        np.testing.assert_array_equal(data.target, [0, 0])
        with self.assertRaises(SchemaError):
            load_csv(path, SchemaConfig(categorical_columns=()))

    def test_write_csv_reloads_identically(self):
        """Writing and reloading keeps values, labels and missing cells."""
        schema = SchemaConfig(categorical_columns=("NAME_CONTRACT_TYPE",))
        data = load_csv(write_text(self.tmp.name, "app.csv", APPLICATIONS), schema)
        again = load_csv(write_csv(data, f"{self.tmp.name}/out.csv"), schema)
        self.assertEqual(again.feature_names, data.feature_names)
        self.assertEqual(again.categories, data.categories)
        np.testing.assert_array_equal(again.values, data.values)
        np.testing.assert_array_equal(again.target, data.target)


class TestEncoding(unittest.TestCase):
    """One-hot and frequency encoding."""

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with
        self.addCleanup(tmp.cleanup)
        schema = SchemaConfig(categorical_columns=("NAME_CONTRACT_TYPE",))
        self.data = load_csv(write_text(tmp.name, "app.csv", APPLICATIONS), schema)

    def test_one_hot_columns_and_missing_group(self):
        """Each label gets one indicator column; a missing category is an all-zero group."""
        encoded, encoding = encode_categoricals(self.data)
        self.assertEqual(
            encoded.feature_names[:2], ("NAME_CONTRACT_TYPE_Cash loans", "NAME_CONTRACT_TYPE_Revolving loans")
        )
        self.assertTrue(encoded.is_numeric)
        np.testing.assert_array_equal(encoded.values[:, :2], [[1, 0], [0, 1], [1, 0], [0, 0]])
        self.assertEqual(encoding.columns[0].labels, ("Cash loans", "Revolving loans"))

    def test_frequency_mode_keeps_missing(self):
        """Frequency encoding maps labels to training frequencies and keeps NaN for missing cells."""
        encoded, _ = encode_categoricals(self.data, mode="frequency")
        column = encoded.column("NAME_CONTRACT_TYPE")
        np.testing.assert_allclose(column[:3], [2 / 3, 1 / 3, 2 / 3])
        self.assertTrue(np.isnan(column[3]))

    def test_high_cardinality_falls_back_to_frequency(self):
        """Columns above the one-hot cardinality limit are frequency encoded."""
        encoding = fit_encoding(self.data, max_onehot_cardinality=1)
        self.assertEqual(encoding.columns[0].method, "frequency")

    def test_unseen_label_maps_to_zero_group(self):
        """Labels absent from the training rows produce all-zero indicators."""
        encoding = fit_encoding(self.data.take([0, 2]))
        encoded = apply_encoding(self.data, encoding)
        self.assertEqual(encoded.feature_names[0], "NAME_CONTRACT_TYPE_Cash loans")
        np.testing.assert_array_equal(encoded.values[:, 0], [1, 0, 1, 0])


class TestAggregateJoin(unittest.TestCase):
    """Auxiliary table aggregation."""

    def test_count_and_mean_per_key(self):
        """Aggregates land on matching ids; rows without records get count 0 and NaN elsewhere."""
        main = make_dataset([[0.0], [1.0], [2.0]], [0, 1, 0], row_ids=[10, 11, 12])
        aux = pd.DataFrame({"SK_ID_CURR": [10, 10, 12], "AMT": [1.0, 3.0, 5.0]})
        joined = aggregate_join(main, aux, "SK_ID_CURR", [("AMT", "count"), ("AMT", "mean")], "bureau")
        self.assertEqual(joined.feature_names, ("x0", "bureau_AMT_count", "bureau_AMT_mean"))
        np.testing.assert_array_equal(joined.column("bureau_AMT_count"), [2, 0, 1])
        mean = joined.column("bureau_AMT_mean")
        self.assertEqual(mean[0], 2.0)
        self.assertTrue(np.isnan(mean[1]))
        np.testing.assert_array_equal(joined.row_ids, [10, 11, 12])

    def test_missing_key_column(self):
        """A join key absent from the auxiliary table is a schema error."""
        main = make_dataset([[0.0]], [0])
        with self.assertRaises(SchemaError):
            aggregate_join(main, pd.DataFrame({"OTHER": [1]}), "SK_ID_CURR", [("OTHER", "sum")])


class TestSplits(unittest.TestCase):
    """Holdout splits and stratified folds."""

    def test_stratified_holdout_counts(self):
        """Each class contributes round(test_fraction * class size) test rows."""
        data = make_dataset(np.arange(100.0), [1] * 15 + [0] * 85)
        train, test = split(data, 0.2, seed=3)
        self.assertEqual(test.class_counts(), (17, 3))
        self.assertEqual(train.n_rows + test.n_rows, 100)
        self.assertFalse(set(train.row_ids) & set(test.row_ids))

    def test_holdout_is_deterministic(self):
        """The same seed always yields the same partition."""
        data = make_dataset(np.arange(50.0), [0, 1] * 25)
        first, second = split(data, 0.3, seed=9)[1], split(data, 0.3, seed=9)[1]
        np.testing.assert_array_equal(first.row_ids, second.row_ids)

    def test_split_rejects_empty_class(self):
        """A split that leaves a class out of one part fails."""
        data = make_dataset(np.arange(10.0), [1] + [0] * 9)
        with self.assertRaises(SplitError):
            split(data, 0.2, seed=1)

    def test_kfold_needs_enough_rows_per_class(self):
        """Each class needs at least k rows."""
        with self.assertRaises(SplitError):
            stratified_kfold(make_dataset(np.arange(6.0), [1, 1, 0, 0, 0, 0]), 3, seed=0)

    @settings(max_examples=50, deadline=None)
    @given(
        st.integers(min_value=2, max_value=6),
        st.integers(min_value=6, max_value=40),
        st.integers(min_value=6, max_value=80),
        st.integers(min_value=0, max_value=10_000),
    )
    def test_kfold_partition_and_balance(self, k, positives, negatives, seed):
        """Folds partition the rows and per-fold class counts differ by at most one."""
        target = [1] * positives + [0] * negatives
        data = make_dataset(np.arange(float(len(target))), target)
        plan = stratified_kfold(data, k, seed)
        held_out_folds = [plan.fold_indices(fold)[1] for fold in range(plan.k)]
        held_out = np.concatenate(held_out_folds)
        self.assertEqual(sorted(held_out.tolist()), list(range(data.n_rows)))
        for label in (0, 1):
            sizes = [int((data.target[idx] == label).sum()) for idx in held_out_folds]
            self.assertLessEqual(max(sizes) - min(sizes), 1)
        totals = [len(idx) for idx in held_out_folds]
        self.assertLessEqual(max(totals) - min(totals), 1)
