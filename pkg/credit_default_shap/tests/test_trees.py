"""Tests for the tree builder and the tree ensembles."""
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from credit_default_shap.utils.errors import ConfigError, TrainingError
from credit_default_shap.utils.trees import (
    ClassificationCriterion,
    GradientCriterion,
    TreeBuilder,
    TreeEnsemble,
    adaboost_alpha,
    fit_adaboost,
    fit_forest,
    fit_gbdt,
    fit_tree,
    resolve_max_features,
    split_gains,
)
from credit_default_shap.tests.fixtures import make_dataset, random_dataset


def _brute_force_gain(criterion, X, stats):
    """Best split gain by enumerating every feature and every midpoint threshold."""
    parent = criterion.score(stats.sum(axis=0))
    best = None
    for feature in range(X.shape[1]):
        values = np.unique(X[:, feature])
        for low, high in zip(values[:-1], values[1:]):
            left = X[:, feature] <= 0.5 * (low + high)
            gain = criterion.score(stats[left].sum(axis=0)) + criterion.score(stats[~left].sum(axis=0)) - parent
            if best is None or gain > best:
                best = gain
    return best


class TestTreeBuilder(unittest.TestCase):
    """Exact greedy split search."""

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(min_value=4, max_value=30),
        st.integers(min_value=1, max_value=4),
        st.integers(min_value=0, max_value=100_000),
    )
    def test_root_split_matches_exhaustive_search(self, n_rows, n_features, seed):
        """The root gain equals the best gain over all features and thresholds."""
        generator = np.random.default_rng(seed)
        X = generator.integers(0, 6, size=(n_rows, n_features)).astype(np.float64)
        probability = generator.uniform(0.05, 0.95, size=n_rows)
        target = (generator.random(n_rows) < 0.5).astype(np.float64)
        stats = np.column_stack([probability - target, probability * (1 - probability)])
        criterion = GradientCriterion(lambda_l2=1.0)
        tree = TreeBuilder(criterion, max_depth=1).build(X, stats, np.ones(n_rows))
        best = _brute_force_gain(criterion, X, stats)
        if best is None or best <= 0:
            self.assertEqual(tree.n_nodes, 1)
        else:
            self.assertEqual(tree.n_nodes, 3)
            self.assertAlmostEqual(tree.gain[0], best, places=9)
            left = X[:, tree.feature[0]] <= tree.threshold[0]
            self.assertEqual(tree.cover[1], left.sum())

    def test_xor_needs_zero_gain_root(self):
        """A depth-two CART tree separates XOR although the root split has no impurity decrease."""
        X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, dtype=np.float64)
        target = np.logical_xor(X[:, 0], X[:, 1]).astype(int)
        model = fit_tree(make_dataset(X, target), max_depth=2)
        np.testing.assert_array_equal(model.predict_proba(X), target)
        self.assertAlmostEqual(model.trees[0].gain[0], 0.0)

    def test_ties_go_to_lower_feature(self):
        """Two identical columns split on the first one."""
        X = np.array([[0, 0], [1, 1], [2, 2], [3, 3]], dtype=np.float64)
        model = fit_tree(make_dataset(X, [0, 0, 1, 1]), max_depth=1)
        self.assertEqual(model.trees[0].feature[0], 0)
        self.assertEqual(model.trees[0].threshold[0], 1.5)

    def test_min_samples_leaf(self):
        """No leaf covers fewer rows than min_samples_leaf."""
        data = random_dataset(n_rows=200, seed=7)
        tree = fit_tree(data, max_depth=6, min_samples_leaf=15).trees[0]
        self.assertTrue((tree.cover[tree.is_leaf] >= 15).all())
        self.assertLessEqual(tree.depth(), 6)

    def test_cart_gains_non_negative(self):
        """Classification splits never record a negative gain."""
        tree = fit_tree(random_dataset(n_rows=150, seed=2), max_depth=5, criterion="entropy").trees[0]
        self.assertTrue((tree.gain[~tree.is_leaf] >= 0).all())

    def test_entropy_in_bits(self):
        """A balanced node has entropy 1 bit and gini 0.5."""
        stats = np.array([2.0, 2.0])
        self.assertAlmostEqual(float(ClassificationCriterion("entropy").impurity(stats)), 1.0)
        self.assertAlmostEqual(float(ClassificationCriterion("gini").impurity(stats)), 0.5)

    def test_invalid_settings(self):
        """Unknown criteria and negative depths are config errors."""
        with self.assertRaises(ConfigError):
            ClassificationCriterion("mse")
        with self.assertRaises(ConfigError):
            TreeBuilder(GradientCriterion(), max_depth=-1)
        with self.assertRaises(ConfigError):
            resolve_max_features("half", 4)
        self.assertEqual(resolve_max_features("sqrt", 10), 3)
        self.assertEqual(resolve_max_features("log2", 10), 3)


class TestForest(unittest.TestCase):
    """Random forests."""

    def test_independent_of_thread_count(self):
        """Predictions do not depend on n_jobs."""
        data = random_dataset(n_rows=150, seed=3)
        single = fit_forest(data, n_trees=8, max_depth=4, seed=5)
        threaded = fit_forest(data, n_trees=8, max_depth=4, seed=5, n_jobs=4)
        np.testing.assert_array_equal(single.predict_proba(data.values), threaded.predict_proba(data.values))

    def test_seed_changes_trees(self):
        """Different seeds draw different bootstrap samples."""
        data = random_dataset(n_rows=150, seed=3)
        first = fit_forest(data, n_trees=5, max_depth=4, seed=1).predict_proba(data.values)
        second = fit_forest(data, n_trees=5, max_depth=4, seed=2).predict_proba(data.values)
        self.assertFalse(np.array_equal(first, second))

    def test_probabilities_are_mean_of_trees(self):
        """An averaged ensemble outputs the mean leaf fraction."""
        data = random_dataset(n_rows=100, seed=4)
        forest = fit_forest(data, n_trees=4, max_depth=3, seed=0)
        expected = np.mean([tree.predict(data.values) for tree in forest.trees], axis=0)
        np.testing.assert_allclose(forest.predict_proba(data.values), expected)
        with self.assertRaises(ConfigError):
            forest.raw_output(data.values, tree_limit=0)


class TestGradientBoosting(unittest.TestCase):
    """Second-order boosting on the logistic loss."""

    def setUp(self):
        self.data = random_dataset(n_rows=300, n_features=5, seed=11)

    def test_training_loss_never_increases(self):
        """Training logloss is non-increasing over 50 full-sample rounds."""
        model = fit_gbdt(self.data, n_rounds=50, max_depth=3, learning_rate=0.1)
        history = np.array(model.training_log)
        self.assertEqual(len(history), 50)
        self.assertTrue((np.diff(history) <= 1e-12).all())

    def test_zero_trees_predict_prior(self):
        """With no trees the margin is the log-odds of the training prior."""
        model = fit_gbdt(self.data, n_rounds=3, max_depth=2)
        prior = self.data.target.mean()
        np.testing.assert_allclose(model.predict_proba(self.data.values, tree_limit=0), prior)

    def test_boosted_splits_have_positive_gain(self):
        """Every boosted split improves the objective strictly."""
        model = fit_gbdt(self.data, n_rounds=10, max_depth=4, gamma_min_gain=0.1)
        for tree in model.trees:
            self.assertTrue((tree.gain[~tree.is_leaf] > 0).all())

    def test_margin_is_sum_of_leaves(self):
        """The margin equals base score plus shrunk leaf values."""
        model = fit_gbdt(self.data, n_rounds=5, max_depth=2, learning_rate=0.3)
        X = self.data.values
        margin = model.base_score + 0.3 * sum(tree.predict(X) for tree in model.trees)
        np.testing.assert_allclose(model.raw_output(X), margin)
        np.testing.assert_allclose(model.predict_proba(X), expit(margin))

    def test_subsample_is_seeded(self):
        """Row subsampling is reproducible for a seed."""
        first = fit_gbdt(self.data, n_rounds=5, max_depth=2, subsample=0.5, seed=3)
        second = fit_gbdt(self.data, n_rounds=5, max_depth=2, subsample=0.5, seed=3)
        np.testing.assert_array_equal(first.raw_output(self.data.values), second.raw_output(self.data.values))

    def test_invalid_rounds(self):
        """At least one round is required."""
        with self.assertRaises(ConfigError):
            fit_gbdt(self.data, n_rounds=0, max_depth=2)

    def test_single_class_rejected(self):
        """Boosting needs both classes."""
        with self.assertRaises(TrainingError):
            fit_gbdt(make_dataset(np.arange(5.0), [0] * 5), n_rounds=2, max_depth=2)

    def test_payload_keeps_predictions(self):
        """Rebuilding from the JSON payload reproduces the margins exactly."""
        model = fit_gbdt(self.data, n_rounds=4, max_depth=3)
        again = TreeEnsemble.from_dict(model.to_dict())
        np.testing.assert_array_equal(again.raw_output(self.data.values), model.raw_output(self.data.values))


class TestAdaBoost(unittest.TestCase):
    """Discrete AdaBoost with stumps."""

    def test_alpha(self):
        """Round weight is half the log-odds of being right."""
        self.assertAlmostEqual(adaboost_alpha(0.25), 0.5 * np.log(3.0))

    def test_ensemble_view_matches_model(self):
        """The additive-margin view predicts the same probabilities."""
        data = random_dataset(n_rows=200, seed=8)
        model = fit_adaboost(data, n_rounds=15)
        ensemble = model.as_ensemble()
        np.testing.assert_allclose(ensemble.predict_proba(data.values), model.predict_proba(data.values))
        self.assertTrue(all(error < 0.5 for error in model.errors))

    def test_perfect_stump_stops(self):
        """A separable feature ends boosting after one round."""
        data = make_dataset(np.arange(10.0), [0] * 5 + [1] * 5)
        model = fit_adaboost(data, n_rounds=10)
        self.assertEqual(len(model.stumps), 1)
        np.testing.assert_array_equal(model.predict_proba(data.values) > 0.5, data.target == 1)

    def test_split_gains_per_feature(self):
        """Split gains are summed per feature over the trees."""
        data = random_dataset(n_rows=120, seed=9)
        model = fit_gbdt(data, n_rounds=3, max_depth=2)
        totals = split_gains(model.trees, data.n_features)
        self.assertEqual(totals.shape, (data.n_features,))
        self.assertAlmostEqual(totals.sum(), sum(tree.gain.sum() for tree in model.trees))
