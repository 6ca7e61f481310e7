"""The seven learners behind one probability-predicting contract, and the ModelArtifact that carries them."""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit, logsumexp

from credit_default_shap.constant import DEFAULT_HYPERPARAMETERS, DEFAULT_SEED, GNB_VAR_SMOOTHING, MODEL_KINDS
from credit_default_shap.utils.dataset import Dataset, SchemaConfig
from credit_default_shap.utils.errors import ConfigError, SchemaError, TrainingError
from credit_default_shap.utils.preprocess import PreprocessConfig, Provenance, apply_preprocessing, fit_preprocessing
from credit_default_shap.utils.trees import (
    AdaBoostModel,
    TreeEnsemble,
    class_weights,
    fit_adaboost,
    fit_forest,
    fit_gbdt,
    fit_tree,
)

logger = logging.getLogger(__name__)


# ------------------------------------------------------------------------------
# LOGISTIC REGRESSION
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LogisticModel:
    """Weights, bias and the per-iteration mean negative log-likelihood (penalty included)."""

    weights: np.ndarray
    bias: float
    training_log: Tuple[float, ...] = ()

    def __post_init__(self):
        """Freeze the weight vector."""
        weights = np.array(self.weights, dtype=np.float64).ravel()
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "training_log", tuple(float(value) for value in self.training_log))

    @property
    def n_features(self) -> int:
        """Input dimensionality."""
        return len(self.weights)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Linear score ``X @ theta + bias``."""
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Sigmoid of the linear score."""
        return expit(self.decision_function(X))

    def to_dict(self) -> dict:
        """JSON-ready payload."""
        return {"weights": self.weights.tolist(), "bias": self.bias, "training_log": list(self.training_log)}

    @classmethod
    def from_dict(cls, payload: dict) -> "LogisticModel":
        """Inverse of :meth:`to_dict`."""
        return cls(weights=payload["weights"], bias=float(payload["bias"]), training_log=payload["training_log"])


def logistic_objective(  # pylint: disable=too-many-arguments
    theta: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
    weights: Optional[np.ndarray] = None,
) -> float:
    """Mean weighted log-likelihood minus ``(l2 / 2) * ||theta||**2``; the bias is not penalized."""
    weights = np.ones(len(y)) if weights is None else weights
    score = X @ theta + bias
    likelihood = weights * (y * score - np.logaddexp(0.0, score))
    return float(likelihood.mean() - 0.5 * l2 * np.dot(theta, theta))


def logistic_gradient(  # pylint: disable=too-many-arguments
    theta: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
    weights: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float]:
    """Analytic gradient of :func:`logistic_objective` with respect to ``(theta, bias)``."""
    weights = np.ones(len(y)) if weights is None else weights
    residual = weights * (y - expit(X @ theta + bias))
    n = len(y)
    return X.T @ residual / n - l2 * theta, float(residual.sum() / n)


def lipschitz_bound(X: np.ndarray, l2: float = 0.0, weights: Optional[np.ndarray] = None) -> float:
    """Upper bound of the gradient's Lipschitz constant, ``max(w) * ||[X, 1]||_F**2 / (4n) + l2``."""
    n = X.shape[0]
    scale = 1.0 if weights is None else float(np.max(weights))
    return scale * (float(np.sum(X**2)) + n) / (4.0 * n) + l2


def fit_logistic(
    dataset: Dataset, lr: float = 0.1, iters: int = 500, l2: float = 0.0, class_weight: str = "none"
) -> LogisticModel:
    """Full-batch gradient ascent on the mean log-likelihood.

    The objective never decreases when ``lr <= 1 / lipschitz_bound(X, l2)``.

    Args:
        dataset (Dataset): Scaled, imputed training rows.
        lr (float): Step size.
        iters (int): Number of full-batch steps.
        l2 (float): Ridge penalty on the weights.
        class_weight (str): ``none`` or ``balanced``.

    Returns:
        LogisticModel: Fitted weights with the training log.
    """
    if lr <= 0 or iters < 0 or l2 < 0:
        raise ConfigError("lr must be positive, iters and l2 non-negative.")
    X = dataset.values
    if not np.isfinite(X).all():
        raise TrainingError("Logistic regression needs finite feature values.")
    y = dataset.target.astype(np.float64)
    weights = class_weights(dataset.target, class_weight)
    safe_step = 1.0 / lipschitz_bound(X, l2, weights) if dataset.n_rows else np.inf
    if lr > safe_step:
        logger.debug("Logistic step %s exceeds 1/L = %.6g; the objective may not increase monotonically", lr, safe_step)
    theta, bias = np.zeros(dataset.n_features), 0.0
    history = []
    for _ in range(iters):
        grad_theta, grad_bias = logistic_gradient(theta, bias, X, y, l2, weights)
        theta = theta + lr * grad_theta
        bias = bias + lr * grad_bias
        history.append(-logistic_objective(theta, bias, X, y, l2, weights))
    if history and not np.isfinite(history[-1]):
        raise TrainingError("Logistic regression diverged; lower the learning rate.")
    bound = lipschitz_bound(X, l2, weights)
    if lr > 1.0 / bound:
        logger.debug("lr %s exceeds 1/L = %.6f; the objective may not be monotone", lr, 1.0 / bound)
    logger.info("Fitted logistic regression on %s rows in %s iterations", dataset.n_rows, iters)
    return LogisticModel(weights=theta, bias=bias, training_log=tuple(history))


# ------------------------------------------------------------------------------
# K NEAREST NEIGHBORS
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class KnnModel:
    """Stored training matrix and labels."""

    train_values: np.ndarray
    train_target: np.ndarray
    k: int
    chunk_size: int = field(default=2048, compare=False)

    def __post_init__(self):
        """Freeze the training data and validate ``k``."""
        values = np.array(self.train_values, dtype=np.float64)
        target = np.array(self.train_target, dtype=np.int8)
        if self.k < 1 or self.k > len(target):
            raise ConfigError(f"k must lie in [1, {len(target)}]; got {self.k}.")
        for array in (values, target):
            array.setflags(write=False)
        object.__setattr__(self, "train_values", values)
        object.__setattr__(self, "train_target", target)

    @property
    def n_features(self) -> int:
        """Input dimensionality."""
        return self.train_values.shape[1]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Positive fraction among the k nearest training rows; equidistant candidates go by lower row index."""
        X = np.asarray(X, dtype=np.float64)
        positive = self.train_target.astype(bool)
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], self.chunk_size):
            distances = cdist(X[start : start + self.chunk_size], self.train_values, metric="sqeuclidean")
            kth = np.partition(distances, self.k - 1, axis=1)[:, self.k - 1 : self.k]
            closer = distances < kth
            tied = distances == kth
            room = self.k - closer.sum(axis=1, keepdims=True)
            chosen = closer | (tied & (np.cumsum(tied, axis=1) <= room))
            out[start : start + self.chunk_size] = (chosen & positive).sum(axis=1) / self.k
        return out

    def to_dict(self) -> dict:
        """JSON-ready payload."""
        return {"k": self.k, "train_values": self.train_values.tolist(), "train_target": self.train_target.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "KnnModel":
        """Inverse of :meth:`to_dict`."""
        values = np.asarray(payload["train_values"], dtype=np.float64)
        n_rows = len(payload["train_target"])
        return cls(train_values=values.reshape(n_rows, -1), train_target=payload["train_target"], k=int(payload["k"]))


def fit_knn(dataset: Dataset, k: int) -> KnnModel:
    """Store the training rows for k-nearest-neighbor voting."""
    if k < 1 or k > dataset.n_rows:
        raise ConfigError(f"k must lie in [1, {dataset.n_rows}] (training size); got {k}.")
    logger.info("Stored %s training rows for %s-nearest-neighbor voting", dataset.n_rows, k)
    return KnnModel(train_values=dataset.values, train_target=dataset.target, k=k)


# ------------------------------------------------------------------------------
# GAUSSIAN NAIVE BAYES
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class GnbModel:
    """Per-class feature means, floored variances and log priors; row 0 is the negative class."""

    means: np.ndarray
    variances: np.ndarray
    log_priors: np.ndarray

    def __post_init__(self):
        """Freeze the parameters."""
        for name in ("means", "variances", "log_priors"):
            array = np.array(getattr(self, name), dtype=np.float64)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def n_features(self) -> int:
        """Input dimensionality."""
        return self.means.shape[1]

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        """``log prior + sum of log densities`` per row and class."""
        X = np.asarray(X, dtype=np.float64)
        columns = []
        for label in (0, 1):
            variance = self.variances[label]
            log_density = -0.5 * np.sum(np.log(2.0 * np.pi * variance)) - 0.5 * np.sum(
                (X - self.means[label]) ** 2 / variance, axis=1
            )
            columns.append(self.log_priors[label] + log_density)
        return np.column_stack(columns)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Normalized positive-class posterior."""
        joint = self.joint_log_likelihood(X)
        return np.exp(joint[:, 1] - logsumexp(joint, axis=1))

    def to_dict(self) -> dict:
        """JSON-ready payload."""
        return {
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "log_priors": self.log_priors.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GnbModel":
        """Inverse of :meth:`to_dict`."""
        return cls(means=payload["means"], variances=payload["variances"], log_priors=payload["log_priors"])


def fit_gnb(dataset: Dataset, var_smoothing: float = GNB_VAR_SMOOTHING) -> GnbModel:
    """Fit per-class Gaussians; every variance gets ``var_smoothing * max column variance`` added."""
    dataset.check_fittable()
    X = dataset.values
    largest = float(np.max(X.var(axis=0))) if dataset.n_features else 0.0
    floor = var_smoothing * largest if largest > 0 else var_smoothing
    means, variances, priors = [], [], []
    for label in (0, 1):
        rows = X[dataset.target == label]
        means.append(rows.mean(axis=0))
        variances.append(rows.var(axis=0) + floor)
        priors.append(np.log(len(rows) / dataset.n_rows))
    logger.info("Fitted Gaussian naive Bayes on %s rows", dataset.n_rows)
    return GnbModel(means=np.array(means), variances=np.array(variances), log_priors=np.array(priors))


# ------------------------------------------------------------------------------
# UNIFORM CONTRACT
# ------------------------------------------------------------------------------
Model = Union[LogisticModel, TreeEnsemble, AdaBoostModel, KnnModel, GnbModel]

MODEL_CLASSES = {
    "logistic": LogisticModel,
    "tree": TreeEnsemble,
    "forest": TreeEnsemble,
    "gbdt": TreeEnsemble,
    "adaboost": AdaBoostModel,
    "knn": KnnModel,
    "gnb": GnbModel,
}


def resolve_hyperparameters(kind: str, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Defaults for ``kind`` updated with ``overrides``; unknown keys are rejected."""
    if kind not in MODEL_KINDS:
        raise ConfigError(f"Unknown model kind {kind}; expected one of {', '.join(MODEL_KINDS)}.")
    params = dict(DEFAULT_HYPERPARAMETERS[kind])
    extra = [key for key in (overrides or {}) if key not in params and not (kind == "forest" and key == "n_jobs")]
    if extra:
        raise ConfigError(f"Unknown hyperparameter(s) for {kind}: {', '.join(sorted(extra))}.")
    params.update(overrides or {})
    return params


def train_model(kind: str, dataset: Dataset, hyperparameters: Dict[str, Any], seed: int = DEFAULT_SEED) -> Model:
    """Fit one learner on model-ready rows.

    Args:
        kind (str): One of ``MODEL_KINDS``.
        dataset (Dataset): Encoded, imputed (and for logistic/knn scaled) rows.
        hyperparameters (dict): Complete hyperparameters, see :func:`resolve_hyperparameters`.
        seed (int): Seed for forest bootstrap/feature draws and boosting subsamples.

    Returns:
        Model: The fitted model.
    """
    params = dict(hyperparameters)
    if kind == "logistic":
        return fit_logistic(dataset, **params)
    if kind == "tree":
        return fit_tree(dataset, **params)
    if kind == "forest":
        return fit_forest(dataset, seed=seed, **params)
    if kind == "gbdt":
        return fit_gbdt(dataset, seed=seed, **params)
    if kind == "adaboost":
        return fit_adaboost(dataset, **params)
    if kind == "knn":
        return fit_knn(dataset, **params)
    if kind == "gnb":
        return fit_gnb(dataset, **params)
    raise ConfigError(f"Unknown model kind {kind}.")


@dataclass(frozen=True, eq=False)
class ModelArtifact:
    """A fitted model with everything needed to apply it to raw rows."""

    kind: str
    feature_names: Tuple[str, ...]
    hyperparameters: Dict[str, Any]
    seed: int
    model: Model
    preprocessing: Optional[Provenance] = None
    schema: Optional[SchemaConfig] = None

    def __post_init__(self):
        """Check the kind and that feature names match the payload dimensionality."""
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"Unknown model kind {self.kind}.")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.model.n_features != len(self.feature_names):
            raise SchemaError(
                f"Model expects {self.model.n_features} features but {len(self.feature_names)} names were given."
            )

    @property
    def ensemble(self) -> Optional[TreeEnsemble]:
        """Tree ensemble view for tree-based kinds, None otherwise."""
        if isinstance(self.model, TreeEnsemble):
            return self.model
        if isinstance(self.model, AdaBoostModel):
            return self.model.as_ensemble()
        return None

    def prepare(self, rows: Dataset) -> Dataset:
        """Apply the stored preprocessing to raw rows, or check the columns when there is none."""
        if self.preprocessing is not None:
            return apply_preprocessing(rows, self.preprocessing)
        if tuple(rows.feature_names) != self.feature_names:
            raise SchemaError("Rows do not match the model's feature names.")
        return rows


def model_proba(model: Model, X: np.ndarray) -> np.ndarray:
    """Positive-class probabilities for a model-ready matrix."""
    return np.clip(model.predict_proba(np.asarray(X, dtype=np.float64)), 0.0, 1.0)


def predict_proba(artifact: ModelArtifact, rows: Dataset) -> np.ndarray:
    """Apply the artifact's preprocessing to ``rows`` and return probabilities in [0, 1]."""
    return model_proba(artifact.model, artifact.prepare(rows).values)


def classify(probabilities: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Hard labels, positive when the probability reaches ``threshold``."""
    return (np.asarray(probabilities) >= threshold).astype(np.int8)


def fit_artifact(  # pylint: disable=too-many-arguments
    train: Dataset,
    kind: str,
    hyperparameters: Optional[Dict[str, Any]] = None,
    preprocess: Optional[PreprocessConfig] = None,
    seed: int = DEFAULT_SEED,
    schema: Optional[SchemaConfig] = None,
) -> ModelArtifact:
    """Fit the preprocessing pipeline and one learner on raw training rows.

    Args:
        train (Dataset): Loaded training rows.
        kind (str): Model kind.
        hyperparameters (dict): Overrides of the kind's defaults.
        preprocess (PreprocessConfig): Pipeline settings; defaults when omitted.
        seed (int): Training seed.
        schema (SchemaConfig): How raw rows were read, stored for ``predict``.

    Returns:
        ModelArtifact: The fitted artifact.
    """
    params = resolve_hyperparameters(kind, hyperparameters)
    data, provenance = fit_preprocessing(train, preprocess or PreprocessConfig(), kind)
    model = train_model(kind, data, params, seed)
    stored = {key: value for key, value in params.items() if key != "n_jobs"}
    return ModelArtifact(
        kind=kind,
        feature_names=data.feature_names,
        hyperparameters=stored,
        seed=seed,
        model=model,
        preprocessing=provenance,
        schema=schema,
    )
