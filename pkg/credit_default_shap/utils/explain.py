"""Feature attributions for tree ensembles: split-gain importance and exact path-dependent SHAP values.

Path-dependent SHAP uses the training cover of each node as the conditional expectation of a subtree when a
feature is unknown. :func:`tree_shap` evaluates it in polynomial time, vectorized over rows; the exponential
:func:`brute_force_shap` evaluates the Shapley formula directly with the same value function.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import List, Optional, Sequence, Tuple

import numpy as np

from credit_default_shap.constant import DEPENDENCY_COLOR_BINS, MODE_ADDITIVE
from credit_default_shap.utils.dataset import Dataset
from credit_default_shap.utils.errors import ExplainError, UnsupportedExplainerError
from credit_default_shap.utils.models import LogisticModel, ModelArtifact
from credit_default_shap.utils.preprocess import equal_frequency_bins
from credit_default_shap.utils.trees import Tree, TreeEnsemble, split_gains

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("raw", "sum-to-one")
BRUTE_FORCE_MAX_FEATURES = 20


@dataclass(frozen=True)
class ImportanceReport:
    """Per-feature importance scores."""

    feature_names: Tuple[str, ...]
    scores: Tuple[float, ...]
    normalization: str
    source: str

    def ranked(self) -> List[Tuple[str, float]]:
        """(feature, score) pairs by decreasing score; ties keep column order."""
        order = sorted(range(len(self.scores)), key=lambda col: (-self.scores[col], col))
        return [(self.feature_names[col], self.scores[col]) for col in order]


def _normalize(scores: np.ndarray, normalization: str) -> np.ndarray:
    if normalization not in NORMALIZATIONS:
        raise ExplainError(f"Unknown normalization {normalization}; expected one of {', '.join(NORMALIZATIONS)}.")
    total = scores.sum()
    if normalization == "sum-to-one" and total > 0:
        return scores / total
    return scores


def gain_importance(
    ensemble: TreeEnsemble, feature_names: Sequence[str], normalization: str = "raw"
) -> ImportanceReport:
    """Average over trees of the total split gain per feature: ``(1/T) * sum_t gain_t(f)``."""
    if ensemble.n_trees == 0:
        raise ExplainError("The ensemble has no trees and therefore no recorded split gains.")
    if len(feature_names) != ensemble.n_features:
        raise ExplainError(f"{len(feature_names)} feature names for a model of {ensemble.n_features} features.")
    scores = split_gains(ensemble.trees, ensemble.n_features) / ensemble.n_trees
    return ImportanceReport(
        feature_names=tuple(feature_names),
        scores=tuple(float(score) for score in _normalize(scores, normalization)),
        normalization=normalization,
        source="gain",
    )


def model_importance(artifact: ModelArtifact, normalization: str = "raw") -> ImportanceReport:
    """Gain importance for tree kinds, absolute coefficients (standardized inputs) for logistic models."""
    ensemble = artifact.ensemble
    if ensemble is not None:
        return gain_importance(ensemble, artifact.feature_names, normalization)
    if isinstance(artifact.model, LogisticModel):
        scores = np.abs(artifact.model.weights)
        return ImportanceReport(
            feature_names=artifact.feature_names,
            scores=tuple(float(score) for score in _normalize(scores, normalization)),
            normalization=normalization,
            source="abs-coefficient",
        )
    raise UnsupportedExplainerError(f"Model kind {artifact.kind} has no importance measure.")


# ------------------------------------------------------------------------------
# TREE SHAP
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ShapMatrix:
    """Per-row attributions; ``base_value + values.sum(axis=1)`` equals the raw model output."""

    values: np.ndarray
    base_value: float
    feature_names: Tuple[str, ...]
    units: str

    @property
    def n_rows(self) -> int:
        """Number of explained rows."""
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        """Attributions of one feature."""
        if name not in self.feature_names:
            raise ExplainError(f"Feature {name} is not in the explained model.")
        return self.values[:, self.feature_names.index(name)]


class _Path:
    """Unique features on the current root-to-node path with their fractions and permutation weights."""

    __slots__ = ("features", "zeros", "ones", "weights")

    def __init__(self, features, zeros, ones, weights):
        self.features = features
        self.zeros = zeros
        self.ones = ones
        self.weights = weights

    def extend(self, zero: float, one: np.ndarray, feature: int) -> "_Path":
        depth = len(self.weights)
        weights = list(self.weights) + [np.full(len(one), 1.0 if depth == 0 else 0.0)]
        for i in range(depth - 1, -1, -1):
            weights[i + 1] = weights[i + 1] + one * weights[i] * (i + 1) / (depth + 1)
            weights[i] = zero * weights[i] * (depth - i) / (depth + 1)
        return _Path(self.features + [feature], self.zeros + [zero], self.ones + [one], weights)

    def unwind(self, index: int) -> "_Path":
        depth = len(self.weights) - 1
        one, zero = self.ones[index], self.zeros[index]
        hot = one != 0
        safe_one = np.where(hot, one, 1.0)
        weights = list(self.weights)
        carry = weights[depth]
        for j in range(depth - 1, -1, -1):
            if_hot = carry * (depth + 1) / ((j + 1) * safe_one)
            if_cold = weights[j] * (depth + 1) / (zero * (depth - j))
            updated = np.where(hot, if_hot, if_cold)
            carry = np.where(hot, weights[j] - updated * zero * (depth - j) / (depth + 1), carry)
            weights[j] = updated
        keep = [k for k in range(depth + 1) if k != index]
        return _Path(
            [self.features[k] for k in keep],
            [self.zeros[k] for k in keep],
            [self.ones[k] for k in keep],
            weights[:depth],
        )

    def unwound_sum(self, index: int) -> np.ndarray:
        depth = len(self.weights) - 1
        one, zero = self.ones[index], self.zeros[index]
        hot = one != 0
        safe_one = np.where(hot, one, 1.0)
        total = np.zeros_like(one)
        carry = self.weights[depth]
        for j in range(depth - 1, -1, -1):
            if_hot = carry * (depth + 1) / ((j + 1) * safe_one)
            if_cold = (self.weights[j] / zero) * (depth + 1) / (depth - j)
            total = total + np.where(hot, if_hot, if_cold)
            carry = np.where(hot, self.weights[j] - if_hot * zero * (depth - j) / (depth + 1), carry)
        return total


def _check_covers(tree: Tree):
    if np.any(tree.cover <= 0):
        raise ExplainError("Malformed ensemble: a node has zero cover.")


def tree_shap_single(tree: Tree, X: np.ndarray, n_features: int) -> np.ndarray:
    """Path-dependent SHAP values of one tree for every row of ``X``."""
    _check_covers(tree)
    X = np.asarray(X, dtype=np.float64)
    phi = np.zeros((X.shape[0], n_features))

    def recurse(node: int, path: _Path, zero: float, one: np.ndarray, feature: int):
        path = path.extend(zero, one, feature)
        if tree.is_leaf[node]:
            for i in range(1, len(path.weights)):
                weight = path.unwound_sum(i)
                phi[:, path.features[i]] += weight * (path.ones[i] - path.zeros[i]) * tree.value[node]
            return
        split_feature = int(tree.feature[node])
        goes_left = X[:, split_feature] <= tree.threshold[node]
        incoming_zero, incoming_one = 1.0, np.ones(X.shape[0])
        if split_feature in path.features[1:]:
            index = path.features.index(split_feature, 1)
            incoming_zero, incoming_one = path.zeros[index], path.ones[index]
            path = path.unwind(index)
        for child, reaches in ((tree.left[node], goes_left), (tree.right[node], ~goes_left)):
            fraction = tree.cover[child] / tree.cover[node]
            recurse(int(child), path, incoming_zero * fraction, incoming_one * reaches, split_feature)

    recurse(0, _Path([], [], [], []), 1.0, np.ones(X.shape[0]), -1)
    return phi


def _ensemble_shap(ensemble: TreeEnsemble, X: np.ndarray) -> np.ndarray:
    total = np.zeros((X.shape[0], ensemble.n_features))
    for tree in ensemble.trees:
        total += tree_shap_single(tree, X, ensemble.n_features)
    if ensemble.mode == MODE_ADDITIVE:
        return ensemble.shrinkage * total
    return total / ensemble.n_trees


def tree_shap(
    ensemble: TreeEnsemble,
    X: np.ndarray,
    feature_names: Optional[Sequence[str]] = None,
    chunk_size: int = 4096,
    n_jobs: int = 1,
) -> ShapMatrix:
    """Exact path-dependent SHAP values for every row of ``X``.

    Args:
        ensemble (TreeEnsemble): Fitted ensemble with node covers.
        X (ndarray): Model-ready rows.
        feature_names (list): Column names; defaults to ``f0, f1, ...``.
        chunk_size (int): Rows explained per vectorized pass.
        n_jobs (int): Threads used across chunks; output order never depends on it.

    Returns:
        ShapMatrix: Attributions in margin units (additive ensembles) or probability units (averaged ones).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != ensemble.n_features:
        raise ExplainError(f"Rows have {X.shape[-1]} columns; the ensemble expects {ensemble.n_features}.")
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{i}" for i in range(X.shape[1]))
    chunks = [X[start : start + chunk_size] for start in range(0, X.shape[0], chunk_size)] or [X]
    if n_jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda chunk: _ensemble_shap(ensemble, chunk), chunks))
    else:
        parts = [_ensemble_shap(ensemble, chunk) for chunk in chunks]
    units = "margin" if ensemble.mode == MODE_ADDITIVE else "probability"
    logger.info("Explained %s rows over %s trees (%s units)", X.shape[0], ensemble.n_trees, units)
    return ShapMatrix(values=np.vstack(parts), base_value=ensemble.expected_value(), feature_names=names, units=units)


def conditional_expectation(tree: Tree, row: np.ndarray, known: frozenset) -> float:
    """Cover-weighted expected tree output when only the features in ``known`` are observed."""

    def walk(node: int) -> float:
        if tree.is_leaf[node]:
            return float(tree.value[node])
        feature = int(tree.feature[node])
        left, right = int(tree.left[node]), int(tree.right[node])
        if feature in known:
            return walk(left if row[feature] <= tree.threshold[node] else right)
        return (tree.cover[left] * walk(left) + tree.cover[right] * walk(right)) / tree.cover[node]

    return walk(0)


def brute_force_shap(ensemble: TreeEnsemble, row: Sequence[float]) -> np.ndarray:
    """Shapley values of one row by enumerating every feature subset (exponential; for validation)."""
    n_features = ensemble.n_features
    if n_features > BRUTE_FORCE_MAX_FEATURES:
        raise ExplainError(f"Brute-force Shapley values are limited to {BRUTE_FORCE_MAX_FEATURES} features.")
    row = np.asarray(row, dtype=np.float64)

    def value(known: frozenset) -> float:
        outputs = [conditional_expectation(tree, row, known) for tree in ensemble.trees]
        if ensemble.mode == MODE_ADDITIVE:
            return ensemble.base_score + ensemble.shrinkage * float(np.sum(outputs))
        return float(np.mean(outputs))

    cache = {}
    for size in range(n_features + 1):
        for subset in combinations(range(n_features), size):
            cache[frozenset(subset)] = value(frozenset(subset))

    phi = np.zeros(n_features)
    for feature in range(n_features):
        others = [other for other in range(n_features) if other != feature]
        for size in range(n_features):
            weight = factorial(size) * factorial(n_features - size - 1) / factorial(n_features)
            for subset in combinations(others, size):
                known = frozenset(subset)
                phi[feature] += weight * (cache[known | {feature}] - cache[known])
    return phi


# ------------------------------------------------------------------------------
# SUMMARIES
# ------------------------------------------------------------------------------
def shap_summary(shap: ShapMatrix) -> List[Tuple[str, float]]:
    """(feature, mean |phi|) by decreasing mean; ties keep column order."""
    if shap.n_rows == 0:
        raise ExplainError("Cannot summarize an empty SHAP matrix.")
    means = np.abs(shap.values).mean(axis=0)
    order = sorted(range(len(means)), key=lambda col: (-means[col], col))
    return [(shap.feature_names[col], float(means[col])) for col in order]


def shap_importance(shap: ShapMatrix, normalization: str = "raw") -> ImportanceReport:
    """Mean absolute SHAP value per feature as an importance report."""
    means = np.abs(shap.values).mean(axis=0)
    return ImportanceReport(
        feature_names=shap.feature_names,
        scores=tuple(float(score) for score in _normalize(means, normalization)),
        normalization=normalization,
        source="mean-abs-shap",
    )


@dataclass(frozen=True, eq=False)
class DependencyTable:
    """Dependency-plot data sorted by feature value (ties by row id)."""

    feature: str
    color_feature: str
    feature_values: np.ndarray
    shap_values: np.ndarray
    color_values: np.ndarray
    row_ids: np.ndarray


def select_color_feature(
    shap: ShapMatrix, dataset: Dataset, feature: str, n_bins: int = DEPENDENCY_COLOR_BINS
) -> str:
    """Feature that linearly explains the most variance of ``phi[feature]`` within equal-frequency bins of it."""
    target_col = dataset.column_index(feature)
    phi = shap.column(feature)
    bins = equal_frequency_bins(dataset.values[:, target_col], n_bins)
    best_name, best_score = feature, -1.0
    for col, name in enumerate(dataset.feature_names):
        if col == target_col:
            continue
        values = dataset.values[:, col]
        explained = 0.0
        for label in np.unique(bins):
            members = bins == label
            if members.sum() < 2:
                continue
            x, y = values[members], phi[members]
            variance = x.var()
            if variance > 0:
                covariance = np.mean((x - x.mean()) * (y - y.mean()))
                explained += members.sum() * covariance**2 / variance
        if explained > best_score:
            best_name, best_score = name, explained
    return best_name


def dependency_data(
    shap: ShapMatrix, dataset: Dataset, feature: str, color_feature: Optional[str] = None
) -> DependencyTable:
    """One row per dataset row: (feature value, its SHAP value, color feature value), sorted by feature value.

    Args:
        shap (ShapMatrix): Attributions of ``dataset``'s rows.
        dataset (Dataset): The model-ready rows that were explained.
        feature (str): Feature on the x axis.
        color_feature (str): Feature used for coloring; selected automatically when omitted.

    Returns:
        DependencyTable: Sorted dependency data.
    """
    if shap.n_rows != dataset.n_rows:
        raise ExplainError(f"SHAP matrix has {shap.n_rows} rows but the dataset has {dataset.n_rows}.")
    for name in (feature, color_feature):
        if name is not None and (name not in dataset.feature_names or name not in shap.feature_names):
            raise ExplainError(f"Unknown feature {name}.")
    if color_feature is None:
        color_feature = select_color_feature(shap, dataset, feature)
        logger.info("Selected %s as the color feature for %s", color_feature, feature)
    feature_values = dataset.column(feature)
    order = np.lexsort((dataset.row_ids, feature_values))
    return DependencyTable(
        feature=feature,
        color_feature=color_feature,
        feature_values=feature_values[order],
        shap_values=shap.column(feature)[order],
        color_values=dataset.column(color_feature)[order],
        row_ids=dataset.row_ids[order],
    )


def explain_rows(artifact: ModelArtifact, rows: Dataset, n_jobs: int = 1) -> Tuple[ShapMatrix, Dataset]:
    """Apply the artifact's preprocessing and explain the prepared rows; non-tree kinds are unsupported."""
    ensemble = artifact.ensemble
    if ensemble is None:
        raise UnsupportedExplainerError(f"SHAP values need a tree ensemble; {artifact.kind} is not one.")
    prepared = artifact.prepare(rows)
    return tree_shap(ensemble, prepared.values, artifact.feature_names, n_jobs=n_jobs), prepared
