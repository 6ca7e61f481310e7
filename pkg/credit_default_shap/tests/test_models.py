"""Tests for the learners and the ModelArtifact contract."""
import unittest

import numpy as np
from scipy.optimize import approx_fprime

from credit_default_shap.constant import MODEL_KINDS
from credit_default_shap.utils.errors import ConfigError, SchemaError
from credit_default_shap.utils.models import (
    ModelArtifact,
    classify,
    fit_artifact,
    fit_gnb,
    fit_knn,
    fit_logistic,
    lipschitz_bound,
    logistic_gradient,
    logistic_objective,
    predict_proba,
    resolve_hyperparameters,
)
from credit_default_shap.tests.fixtures import make_dataset, random_dataset

SMALL = {
    "logistic": {"iters": 100},
    "tree": {"max_depth": 3, "min_samples_leaf": 5},
    "forest": {"n_trees": 5, "max_depth": 3},
    "gbdt": {"n_rounds": 10, "max_depth": 2},
    "adaboost": {"n_rounds": 10},
    "knn": {"k": 5},
    "gnb": {},
}


class TestLogistic(unittest.TestCase):
    """Gradient ascent logistic regression."""

    def test_gradient_matches_finite_differences(self):
        """The analytic gradient agrees with a central finite difference of the objective."""
        data = random_dataset(n_rows=60, n_features=3, seed=1)
        X, y = data.values, data.target.astype(np.float64)
        weights = np.linspace(0.5, 1.5, len(y))
        point = np.array([0.3, -0.2, 0.1, 0.05])

        def objective(params):
            return logistic_objective(params[:-1], params[-1], X, y, l2=0.1, weights=weights)

        numeric = approx_fprime(point, objective, 1e-7)
        grad_theta, grad_bias = logistic_gradient(point[:-1], point[-1], X, y, l2=0.1, weights=weights)
        np.testing.assert_allclose(np.append(grad_theta, grad_bias), numeric, atol=1e-5)

    def test_objective_monotone_below_lipschitz_step(self):
        """With lr at most 1/L the training loss never increases."""
        data = random_dataset(n_rows=200, seed=2)
        lr = 1.0 / lipschitz_bound(data.values, 0.01)
        model = fit_logistic(data, lr=lr, iters=60, l2=0.01)
        self.assertTrue((np.diff(model.training_log) <= 1e-12).all())

    def test_step_above_lipschitz_bound_is_logged(self):
        """A step larger than 1/L still trains and is reported at DEBUG."""
        data = random_dataset(n_rows=100, seed=4)
        lr = 4.0 / lipschitz_bound(data.values)
        with self.assertLogs("credit_default_shap.utils.models", level="DEBUG") as logs:
            model = fit_logistic(data, lr=lr, iters=5)
        self.assertTrue(any("exceeds 1/L" in line for line in logs.output))
        self.assertTrue(np.isfinite(model.training_log).all())

    def test_learns_the_planted_signs(self):
        """The first column raises and the second lowers the default probability."""
        model = fit_logistic(random_dataset(n_rows=500, seed=3), lr=0.5, iters=300)
        self.assertGreater(model.weights[0], 0)
        self.assertLess(model.weights[1], 0)

    def test_invalid_settings(self):
        """A non-positive learning rate is a config error."""
        with self.assertRaises(ConfigError):
            fit_logistic(random_dataset(), lr=0.0)


class TestKnn(unittest.TestCase):
    """K nearest neighbors voting."""

    def test_fraction_of_positive_neighbors(self):
        """The probability is the positive share among the k closest training rows."""
        data = make_dataset([[0.0], [1.0], [2.0], [10.0], [11.0]], [1, 1, 0, 0, 0])
        model = fit_knn(data, k=3)
        np.testing.assert_allclose(model.predict_proba([[0.5], [10.5]]), [2 / 3, 0.0])

    def test_ties_prefer_lower_row_index(self):
        """Equidistant candidates are taken in training order."""
        data = make_dataset([[-1.0], [1.0]], [1, 0])
        np.testing.assert_array_equal(fit_knn(data, k=1).predict_proba([[0.0]]), [1.0])

    def test_chunking_does_not_change_results(self):
        """Scoring in chunks gives the same probabilities."""
        data = random_dataset(n_rows=80, seed=4)
        model = fit_knn(data, k=7)
        chunked = type(model)(model.train_values, model.train_target, model.k, chunk_size=9)
        np.testing.assert_array_equal(chunked.predict_proba(data.values), model.predict_proba(data.values))

    def test_k_larger_than_training_set(self):
        """k beyond the training size is a config error."""
        with self.assertRaises(ConfigError):
            fit_knn(make_dataset([[0.0], [1.0]], [0, 1]), k=3)


class TestGnb(unittest.TestCase):
    """Gaussian naive Bayes."""

    def test_posterior_from_class_gaussians(self):
        """Posteriors follow the per-class means and priors."""
        data = make_dataset([[0.0], [0.2], [-0.2], [5.0], [5.2], [4.8]], [0, 0, 0, 1, 1, 1])
        model = fit_gnb(data)
        np.testing.assert_allclose(model.means[:, 0], [0.0, 5.0])
        np.testing.assert_allclose(model.log_priors, np.log([0.5, 0.5]))
        probability = model.predict_proba([[0.0], [2.5], [5.0]])
        self.assertLess(probability[0], 1e-6)
        self.assertAlmostEqual(probability[1], 0.5)
        self.assertGreater(probability[2], 1 - 1e-6)

    def test_constant_column_is_smoothed(self):
        """A zero-variance column does not produce infinite densities."""
        data = make_dataset([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]], [0, 0, 1, 1])
        probability = fit_gnb(data).predict_proba(data.values)
        self.assertTrue(np.isfinite(probability).all())


class TestContract(unittest.TestCase):
    """Behavior shared by every model kind."""

    def setUp(self):
        self.train = random_dataset(n_rows=160, seed=5)
        self.test = random_dataset(n_rows=40, seed=6)

    def test_every_kind_predicts_probabilities(self):
        """All seven kinds return one probability in [0, 1] per row."""
        for kind in MODEL_KINDS:
            with self.subTest(kind=kind):
                artifact = fit_artifact(self.train, kind, SMALL[kind], seed=3)
                probability = predict_proba(artifact, self.test)
                self.assertEqual(probability.shape, (self.test.n_rows,))
                self.assertTrue(((probability >= 0) & (probability <= 1)).all())

    def test_tree_kinds_expose_an_ensemble(self):
        """Tree-based kinds have an ensemble view; the others do not."""
        for kind in ("adaboost", "gbdt", "knn"):
            artifact = fit_artifact(self.train, kind, SMALL[kind])
            self.assertEqual(artifact.ensemble is None, kind == "knn")

    def test_unknown_hyperparameter(self):
        """Keys outside the kind's defaults are rejected."""
        with self.assertRaises(ConfigError):
            resolve_hyperparameters("gbdt", {"eta": 0.3})
        with self.assertRaises(ConfigError):
            resolve_hyperparameters("svm")
        self.assertEqual(resolve_hyperparameters("knn", {"k": 3}), {"k": 3})

    def test_feature_name_count_checked(self):
        """An artifact's names must match the model dimensionality."""
        artifact = fit_artifact(self.train, "gnb")
        with self.assertRaises(SchemaError):
            ModelArtifact(kind="gnb", feature_names=("a",), hyperparameters={}, seed=0, model=artifact.model)

    def test_classify_threshold(self):
        """Probabilities at the threshold count as positive."""
        np.testing.assert_array_equal(classify([0.2, 0.5, 0.9]), [0, 1, 1])
        np.testing.assert_array_equal(classify([0.2, 0.5, 0.9], threshold=0.6), [0, 0, 1])
