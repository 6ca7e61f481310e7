"""Tests for SHAP values, importance reports and dependency data."""
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from credit_default_shap.utils.errors import ExplainError, UnsupportedExplainerError
from credit_default_shap.utils.explain import (
    brute_force_shap,
    dependency_data,
    explain_rows,
    gain_importance,
    model_importance,
    shap_importance,
    shap_summary,
    ShapMatrix,
    tree_shap,
)
from credit_default_shap.utils.models import fit_artifact
from credit_default_shap.utils.trees import fit_adaboost, fit_forest, fit_gbdt, fit_tree
from credit_default_shap.tests.fixtures import make_dataset, random_dataset


def _ensemble(kind, data, seed):
    if kind == "tree":
        return fit_tree(data, max_depth=5)
    if kind == "forest":
        return fit_forest(data, n_trees=3, max_depth=4, max_features="all", seed=seed)
    if kind == "adaboost":
        return fit_adaboost(data, n_rounds=6).as_ensemble()
    return fit_gbdt(data, n_rounds=4, max_depth=4, learning_rate=0.3)


class TestTreeShap(unittest.TestCase):
    """Exact path-dependent SHAP values."""

    @settings(max_examples=20, deadline=None)
    @given(
        st.sampled_from(["tree", "forest", "gbdt", "adaboost"]),
        st.integers(min_value=2, max_value=5),
        st.integers(min_value=0, max_value=10_000),
    )
    def test_matches_subset_enumeration(self, kind, n_features, seed):
        """Polynomial SHAP values equal the Shapley formula evaluated over every subset."""
        data = random_dataset(n_rows=80, n_features=n_features, seed=seed)
        ensemble = _ensemble(kind, data, seed)
        rows = data.values[:4]
        shap = tree_shap(ensemble, rows)
        for index, row in enumerate(rows):
            np.testing.assert_allclose(shap.values[index], brute_force_shap(ensemble, row), atol=1e-9)

    def test_local_accuracy(self):
        """Base value plus attributions equals the raw output of every row."""
        data = random_dataset(n_rows=200, n_features=6, seed=21)
        for ensemble in (fit_gbdt(data, n_rounds=20, max_depth=4), fit_forest(data, n_trees=5, max_depth=5)):
            shap = tree_shap(ensemble, data.values, chunk_size=37, n_jobs=3)
            np.testing.assert_allclose(
                shap.base_value + shap.values.sum(axis=1), ensemble.raw_output(data.values), atol=1e-9
            )

    def test_units_follow_ensemble_mode(self):
        """Boosted models explain margins and forests explain probabilities."""
        data = random_dataset(n_rows=60, seed=3)
        self.assertEqual(tree_shap(fit_gbdt(data, n_rounds=2, max_depth=2), data.values).units, "margin")
        self.assertEqual(tree_shap(fit_tree(data, max_depth=2), data.values).units, "probability")

    def test_unused_feature_gets_zero(self):
        """A column no split uses has zero attribution."""
        generator = np.random.default_rng(0)
        signal = generator.random(100)
        data = make_dataset(np.column_stack([signal, np.zeros(100)]), (signal > 0.5).astype(int))
        shap = tree_shap(fit_tree(data, max_depth=3), data.values)
        np.testing.assert_array_equal(shap.values[:, 1], 0.0)

    def test_column_count_checked(self):
        """Rows must match the ensemble's width."""
        data = random_dataset(n_rows=40, n_features=3, seed=1)
        with self.assertRaises(ExplainError):
            tree_shap(fit_tree(data, max_depth=2), np.zeros((2, 4)))


class TestSummaries(unittest.TestCase):
    """Summary ordering, importance reports and dependency data."""

    def setUp(self):
        self.shap = ShapMatrix(
            values=np.array([[0.1, -0.4, 0.2], [-0.1, 0.4, -0.2]]),
            base_value=0.0,
            feature_names=("a", "b", "c"),
            units="margin",
        )

    def test_summary_by_mean_absolute_value(self):
        """Features rank by mean |phi|."""
        self.assertEqual([name for name, _ in shap_summary(self.shap)], ["b", "c", "a"])
        self.assertAlmostEqual(shap_summary(self.shap)[0][1], 0.4)

    def test_shap_importance_normalized(self):
        """Sum-to-one importance scores add up to one."""
        report = shap_importance(self.shap, normalization="sum-to-one")
        self.assertAlmostEqual(sum(report.scores), 1.0)
        self.assertEqual(report.ranked()[0][0], "b")
        with self.assertRaises(ExplainError):
            shap_importance(self.shap, normalization="max")

    def test_gain_importance_averages_over_trees(self):
        """Gain importance is the per-tree mean of summed split gains."""
        data = random_dataset(n_rows=150, seed=5)
        ensemble = fit_gbdt(data, n_rounds=4, max_depth=3)
        report = gain_importance(ensemble, data.feature_names)
        total = sum(tree.gain.sum() for tree in ensemble.trees) / ensemble.n_trees
        self.assertAlmostEqual(sum(report.scores), total)
        self.assertEqual(report.source, "gain")

    def test_logistic_importance_and_knn_unsupported(self):
        """Logistic models rank by absolute weight; knn has no importance measure or SHAP values."""
        data = random_dataset(n_rows=100, seed=6)
        report = model_importance(fit_artifact(data, "logistic", {"iters": 50}))
        self.assertEqual(report.source, "abs-coefficient")
        knn = fit_artifact(data, "knn", {"k": 3})
        with self.assertRaises(UnsupportedExplainerError):
            model_importance(knn)
        with self.assertRaises(UnsupportedExplainerError) as ctx:
            explain_rows(knn, data)
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_dependency_sorted_by_feature_value(self):
        """Dependency rows are sorted by the feature and carry its SHAP values."""
        data = random_dataset(n_rows=120, n_features=3, seed=7)
        artifact = fit_artifact(data, "gbdt", {"n_rounds": 5, "max_depth": 3})
        shap, prepared = explain_rows(artifact, data)
        table = dependency_data(shap, prepared, "x0", color_feature="x2")
        self.assertTrue((np.diff(table.feature_values) >= 0).all())
        order = np.lexsort((prepared.row_ids, prepared.column("x0")))
        np.testing.assert_array_equal(table.shap_values, shap.column("x0")[order])
        np.testing.assert_array_equal(table.color_values, prepared.column("x2")[order])
        self.assertEqual(table.color_feature, "x2")

    def test_color_feature_selected_automatically(self):
        """Without a color feature another column is chosen."""
        data = random_dataset(n_rows=120, n_features=3, seed=8)
        artifact = fit_artifact(data, "gbdt", {"n_rounds": 5, "max_depth": 3})
        shap, prepared = explain_rows(artifact, data)
        self.assertIn(dependency_data(shap, prepared, "x0").color_feature, ("x1", "x2"))
        with self.assertRaises(ExplainError):
            dependency_data(shap, prepared, "missing")
