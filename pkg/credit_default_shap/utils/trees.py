"""Exact greedy decision trees and the ensembles built from them.

One builder serves every tree learner. A criterion turns per-row statistics into a node score, and the gain of
a split is ``score(left) + score(right) - score(parent)``:

* classification (CART): statistics are the weighted class masses, score is ``-W * impurity``;
* gradient boosting: statistics are ``(G, H)``, score is ``G**2 / (2 * (H + lambda))`` minus ``gamma`` per split.

Candidate thresholds are midpoints between consecutive distinct sorted values; rows go left when
``x <= threshold``. Gain ties go to the lower feature index, then to the lower threshold.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit, logit

from credit_default_shap.constant import ADABOOST_EPS_CLAMP, MODE_ADDITIVE, MODE_AVERAGED
from credit_default_shap.utils.dataset import Dataset
from credit_default_shap.utils.errors import ConfigError, TrainingError
from credit_default_shap.utils.rng import stream

logger = logging.getLogger(__name__)

LEAF = -1
CRITERIA = ("gini", "entropy")
CLASS_WEIGHTS = ("none", "balanced")


@dataclass(frozen=True, eq=False)
class Tree:
    """Binary tree stored as parallel node arrays in preorder; node 0 is the root.

    Leaves have ``feature == -1`` and no children. ``value`` holds the positive-class fraction for
    classification trees and the additive leaf weight for boosted trees; internal nodes keep their own value too.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray
    gain: np.ndarray

    def __post_init__(self):
        """Freeze arrays and check the binary-tree structure."""
        arrays = {
            "feature": np.array(self.feature, dtype=np.int64),
            "threshold": np.array(self.threshold, dtype=np.float64),
            "left": np.array(self.left, dtype=np.int64),
            "right": np.array(self.right, dtype=np.int64),
            "value": np.array(self.value, dtype=np.float64),
            "cover": np.array(self.cover, dtype=np.float64),
            "gain": np.array(self.gain, dtype=np.float64),
        }
        sizes = {len(array) for array in arrays.values()}
        if len(sizes) != 1 or 0 in sizes:
            raise TrainingError("Tree node arrays must be non-empty and of equal length.")
        leaf = arrays["feature"] == LEAF
        if np.any((arrays["left"] == LEAF) != leaf) or np.any((arrays["right"] == LEAF) != leaf):
            raise TrainingError("Internal nodes need both children and leaves need none.")
        for name, array in arrays.items():
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def n_nodes(self) -> int:
        """Number of nodes."""
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        """Boolean mask of leaves."""
        return self.feature == LEAF

    def depth(self) -> int:
        """Length of the longest root-to-leaf path."""
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if not self.is_leaf[node]:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf each row of ``X`` lands in."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = ~self.is_leaf[node]
        while active.any():
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active[rows] = ~self.is_leaf[node[rows]]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf value of every row."""
        return self.value[self.apply(X)]

    def expected_value(self) -> float:
        """Cover-weighted mean of the leaf values, the prediction with no feature known."""
        leaves = self.is_leaf
        return float(np.dot(self.cover[leaves], self.value[leaves]) / self.cover[leaves].sum())

    def scaled(self, factor: float) -> "Tree":
        """Copy with every node value multiplied by ``factor``."""
        return Tree(self.feature, self.threshold, self.left, self.right, self.value * factor, self.cover, self.gain)

    def to_dict(self) -> dict:
        """JSON-ready node arrays."""
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_value": self.value.tolist(),
            "cover": self.cover.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Tree":
        """Inverse of :meth:`to_dict`."""
        return cls(
            feature=payload["feature"],
            threshold=payload["threshold"],
            left=payload["left"],
            right=payload["right"],
            value=payload["leaf_value"],
            cover=payload["cover"],
            gain=payload["gain"],
        )


@dataclass(frozen=True, eq=False)
class TreeEnsemble:
    """A forest (averaged probabilities) or a boosted model (additive margin)."""

    trees: Tuple[Tree, ...]
    mode: str
    n_features: int
    base_score: float = 0.0
    shrinkage: float = 1.0
    training_log: Tuple[float, ...] = ()

    def __post_init__(self):
        """Check the mode and that averaged ensembles are non-empty."""
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "training_log", tuple(float(value) for value in self.training_log))
        if self.mode not in (MODE_AVERAGED, MODE_ADDITIVE):
            raise TrainingError(f"Unknown ensemble mode {self.mode}.")
        if self.mode == MODE_AVERAGED and not self.trees:
            raise TrainingError("An averaged ensemble needs at least one tree.")

    @property
    def n_trees(self) -> int:
        """Tree count T."""
        return len(self.trees)

    def _limit(self, tree_limit: Optional[int]) -> Tuple[Tree, ...]:
        if tree_limit is None:
            return self.trees
        if tree_limit < 0 or (self.mode == MODE_AVERAGED and tree_limit == 0):
            raise ConfigError(f"Invalid tree_limit {tree_limit} for a {self.mode} ensemble.")
        return self.trees[:tree_limit]

    def raw_output(self, X: np.ndarray, tree_limit: Optional[int] = None) -> np.ndarray:
        """Margin (additive mode) or mean leaf probability (averaged mode) using the first ``tree_limit`` trees."""
        trees = self._limit(tree_limit)
        X = np.asarray(X, dtype=np.float64)
        if self.mode == MODE_ADDITIVE:
            total = np.full(X.shape[0], self.base_score)
            for tree in trees:
                total += self.shrinkage * tree.predict(X)
            return total
        return np.mean([tree.predict(X) for tree in trees], axis=0)

    def predict_proba(self, X: np.ndarray, tree_limit: Optional[int] = None) -> np.ndarray:
        """Positive-class probability."""
        raw = self.raw_output(X, tree_limit)
        if self.mode == MODE_ADDITIVE:
            return expit(raw)
        return np.clip(raw, 0.0, 1.0)

    def expected_value(self) -> float:
        """Model output with no feature known, in the units of :meth:`raw_output`."""
        if self.mode == MODE_ADDITIVE:
            return self.base_score + self.shrinkage * sum(tree.expected_value() for tree in self.trees)
        return float(np.mean([tree.expected_value() for tree in self.trees]))

    def to_dict(self) -> dict:
        """JSON-ready payload."""
        return {
            "mode": self.mode,
            "n_features": self.n_features,
            "base_score": self.base_score,
            "shrinkage": self.shrinkage,
            "training_log": list(self.training_log),
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TreeEnsemble":
        """Inverse of :meth:`to_dict`."""
        return cls(
            trees=tuple(Tree.from_dict(tree) for tree in payload["trees"]),
            mode=payload["mode"],
            n_features=int(payload["n_features"]),
            base_score=float(payload["base_score"]),
            shrinkage=float(payload["shrinkage"]),
            training_log=tuple(payload.get("training_log", ())),
        )


# ------------------------------------------------------------------------------
# SPLIT CRITERIA
# ------------------------------------------------------------------------------
class ClassificationCriterion:
    """Weighted class masses ``(w * (1 - y), w * y)``; score ``-W * impurity``."""

    strict_gain = False

    def __init__(self, criterion: str = "gini"):
        """Pick gini or entropy impurity."""
        if criterion not in CRITERIA:
            raise ConfigError(f"Unknown criterion {criterion}; expected one of {', '.join(CRITERIA)}.")
        self.criterion = criterion

    @staticmethod
    def row_stats(target: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Per-row statistics."""
        target = target.astype(np.float64)
        return np.column_stack([weights * (1.0 - target), weights * target])

    def impurity(self, stats: np.ndarray) -> np.ndarray:
        """Gini or entropy (bits) of class masses along the last axis."""
        stats = np.asarray(stats, dtype=np.float64)
        total = stats.sum(axis=-1, keepdims=True)
        share = np.divide(stats, total, out=np.zeros_like(stats), where=total > 0)
        if self.criterion == "gini":
            return 1.0 - np.sum(share**2, axis=-1)
        logs = np.log2(share, out=np.zeros_like(share), where=share > 0)
        return -np.sum(share * logs, axis=-1)

    def score(self, stats: np.ndarray) -> np.ndarray:
        """Node score; higher is better."""
        return -np.sum(stats, axis=-1) * self.impurity(stats)

    @staticmethod
    def value(stats: np.ndarray) -> float:
        """Positive-class fraction."""
        total = stats.sum()
        return float(stats[1] / total) if total > 0 else 0.0

    @staticmethod
    def is_pure(stats: np.ndarray) -> bool:
        """True when one class has no mass."""
        return bool(stats[0] <= 0.0 or stats[1] <= 0.0)


class GradientCriterion:
    """Gradient/hessian sums ``(G, H)`` of the logistic loss; score ``G**2 / (2 * (H + lambda))``."""

    strict_gain = True

    def __init__(self, lambda_l2: float = 1.0, gamma_min_gain: float = 0.0):
        """Store the leaf-weight regularizer and the per-split penalty."""
        self.lambda_l2 = lambda_l2
        self.gamma = gamma_min_gain

    def _denominator(self, hessian):
        return np.maximum(hessian + self.lambda_l2, 1e-16)

    def score(self, stats: np.ndarray) -> np.ndarray:
        """Node score; higher is better."""
        stats = np.asarray(stats, dtype=np.float64)
        return 0.5 * stats[..., 0] ** 2 / self._denominator(stats[..., 1])

    def value(self, stats: np.ndarray) -> float:
        """Newton leaf weight ``-G / (H + lambda)``."""
        return float(-stats[0] / self._denominator(stats[1]))

    @staticmethod
    def is_pure(stats: np.ndarray) -> bool:  # pylint: disable=unused-argument
        """Gradient nodes never stop on purity."""
        return False


Criterion = Union[ClassificationCriterion, GradientCriterion]


# ------------------------------------------------------------------------------
# BUILDER
# ------------------------------------------------------------------------------
class TreeBuilder:  # pylint: disable=too-many-instance-attributes
    """Grow one tree depth-first, appending nodes in preorder."""

    def __init__(
        self,
        criterion: Criterion,
        max_depth: int,
        min_samples_leaf: int = 1,
        max_features: Optional[int] = None,
        generator: Optional[np.random.Generator] = None,
    ):
        """Store growth limits; ``max_features`` below the column count needs a ``generator``."""
        if max_depth < 0:
            raise ConfigError(f"max_depth must be non-negative; got {max_depth}.")
        if min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be at least 1; got {min_samples_leaf}.")
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.generator = generator
        self._nodes: List[list] = []

    def build(self, X: np.ndarray, stats: np.ndarray, counts: np.ndarray) -> Tree:
        """Grow a tree on rows with positive ``counts`` (row multiplicities).

        Args:
            X (ndarray): Feature matrix, no missing values.
            stats (ndarray): Per-row criterion statistics, already multiplied by the multiplicity.
            counts (ndarray): Per-row multiplicity; zero excludes a row, bootstrap draws give larger counts.

        Returns:
            Tree: The fitted tree.
        """
        self._nodes = []
        rows = np.flatnonzero(counts > 0)
        if len(rows) == 0:
            raise TrainingError("Cannot grow a tree on zero rows.")
        self._grow(X, stats, counts, rows, depth=0)
        columns = list(zip(*self._nodes))
        return Tree(*[np.asarray(column) for column in columns])

    def _candidate_features(self, n_features: int) -> np.ndarray:
        if self.max_features is None or self.max_features >= n_features:
            return np.arange(n_features)
        return np.sort(self.generator.choice(n_features, size=self.max_features, replace=False))

    def _grow(self, X, stats, counts, rows, depth) -> int:
        node_stats = stats[rows].sum(axis=0)
        cover = float(counts[rows].sum())
        node = len(self._nodes)
        self._nodes.append([LEAF, 0.0, LEAF, LEAF, self.criterion.value(node_stats), cover, 0.0])

        if depth >= self.max_depth or cover < 2 * self.min_samples_leaf or self.criterion.is_pure(node_stats):
            return node
        split = self._best_split(X, stats, counts, rows, node_stats)
        if split is None:
            return node
        gain, feature, threshold = split
        go_left = X[rows, feature] <= threshold
        self._nodes[node][0:2] = [feature, threshold]
        self._nodes[node][6] = gain
        self._nodes[node][2] = self._grow(X, stats, counts, rows[go_left], depth + 1)
        self._nodes[node][3] = self._grow(X, stats, counts, rows[~go_left], depth + 1)
        return node

    def _best_split(self, X, stats, counts, rows, node_stats) -> Optional[Tuple[float, int, float]]:
        parent_score = self.criterion.score(node_stats)
        penalty = getattr(self.criterion, "gamma", 0.0)
        sub_stats, sub_counts = stats[rows], counts[rows]
        total = sub_counts.sum()
        best: Optional[Tuple[float, int, float]] = None
        for feature in self._candidate_features(X.shape[1]):
            values = X[rows, feature]
            order = np.argsort(values, kind="stable")
            ordered = values[order]
            distinct = ordered[1:] > ordered[:-1]
            if not distinct.any():
                continue
            left_counts = np.cumsum(sub_counts[order])[:-1]
            valid = distinct & (left_counts >= self.min_samples_leaf) & (total - left_counts >= self.min_samples_leaf)
            if not valid.any():
                continue
            left = np.cumsum(sub_stats[order], axis=0)[:-1][valid]
            gains = self.criterion.score(left) + self.criterion.score(node_stats - left) - parent_score - penalty
            pick = int(np.argmax(gains))
            if best is not None and gains[pick] <= best[0]:
                continue
            position = np.flatnonzero(valid)[pick]
            low, high = ordered[position], ordered[position + 1]
            threshold = 0.5 * (low + high)
            if threshold >= high:
                threshold = low
            best = (float(gains[pick]), int(feature), float(threshold))

        if best is None:
            return None
        if self.criterion.strict_gain:
            return best if best[0] > 0.0 else None
        # impurity decrease is never negative; rounding can leave a tiny negative value
        if best[0] < -1e-9:
            return None
        return (max(best[0], 0.0), best[1], best[2])


# ------------------------------------------------------------------------------
# LEARNERS
# ------------------------------------------------------------------------------
def class_weights(target: np.ndarray, mode: str) -> np.ndarray:
    """Per-row weights: 1, or ``n / (2 * n_class)`` in balanced mode."""
    if mode not in CLASS_WEIGHTS:
        raise ConfigError(f"Unknown class_weight {mode}; expected one of {', '.join(CLASS_WEIGHTS)}.")
    weights = np.ones(len(target))
    if mode == "balanced":
        counts = np.bincount(np.asarray(target, dtype=np.int64), minlength=2).astype(np.float64)
        weights = len(target) / (2.0 * counts[np.asarray(target, dtype=np.int64)])
    return weights


def _check_trainable(dataset: Dataset):
    if dataset.n_rows == 0:
        raise TrainingError("Cannot train on an empty dataset.")
    if not dataset.is_numeric or np.isnan(dataset.values).any():
        raise TrainingError("Tree learners need encoded, imputed columns.")


def resolve_max_features(max_features: Union[int, str, None], n_features: int) -> Optional[int]:
    """Turn ``"all"``/``"sqrt"``/``"log2"``/an integer into a candidate count (None means all columns)."""
    if max_features is None or max_features == "all":
        return None
    if max_features == "sqrt":
        return max(1, int(np.floor(np.sqrt(n_features))))
    if max_features == "log2":
        return max(1, int(np.floor(np.log2(max(n_features, 1)))))
    if isinstance(max_features, str):
        raise ConfigError(f"Unknown max_features {max_features}.")
    if not 1 <= int(max_features) <= n_features:
        raise ConfigError(f"max_features={max_features} must lie in [1, {n_features}].")
    return int(max_features)


def _grow_classifier(  # pylint: disable=too-many-arguments
    dataset: Dataset,
    counts: np.ndarray,
    weights: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
    criterion: str,
    max_features: Optional[int] = None,
    generator: Optional[np.random.Generator] = None,
) -> Tree:
    stats = ClassificationCriterion.row_stats(dataset.target, weights * counts)
    builder = TreeBuilder(ClassificationCriterion(criterion), max_depth, min_samples_leaf, max_features, generator)
    return builder.build(dataset.values, stats, counts)


def fit_tree(
    dataset: Dataset,
    max_depth: int,
    min_samples_leaf: int = 1,
    criterion: str = "gini",
    class_weight: str = "none",
) -> TreeEnsemble:
    """Fit a single CART classification tree; leaves hold the positive-class fraction."""
    _check_trainable(dataset)
    counts = np.ones(dataset.n_rows)
    tree = _grow_classifier(
        dataset, counts, class_weights(dataset.target, class_weight), max_depth, min_samples_leaf, criterion
    )
    logger.info("Fitted a tree with %s nodes (depth %s) on %s rows", tree.n_nodes, tree.depth(), dataset.n_rows)
    return TreeEnsemble(trees=(tree,), mode=MODE_AVERAGED, n_features=dataset.n_features)


def fit_forest(  # pylint: disable=too-many-arguments
    dataset: Dataset,
    n_trees: int,
    max_depth: int,
    max_features: Union[int, str, None] = "sqrt",
    bootstrap: bool = True,
    seed: int = 0,
    min_samples_leaf: int = 1,
    criterion: str = "gini",
    class_weight: str = "none",
    n_jobs: int = 1,
) -> TreeEnsemble:
    """Fit a random forest; tree ``t`` draws its bootstrap sample and feature subsets from stream ``(seed, t)``.

    Trees are collected in index order, so the result does not depend on ``n_jobs``.
    """
    _check_trainable(dataset)
    if n_trees < 1:
        raise ConfigError(f"n_trees must be at least 1; got {n_trees}.")
    candidates = resolve_max_features(max_features, dataset.n_features)
    weights = class_weights(dataset.target, class_weight)

    def grow(index: int) -> Tree:
        generator = stream(seed, "forest-tree", index)
        if bootstrap:
            draws = generator.integers(0, dataset.n_rows, size=dataset.n_rows)
            counts = np.bincount(draws, minlength=dataset.n_rows).astype(np.float64)
        else:
            counts = np.ones(dataset.n_rows)
        return _grow_classifier(
            dataset, counts, weights, max_depth, min_samples_leaf, criterion, candidates, generator
        )

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(grow, range(n_trees)))
    else:
        trees = tuple(grow(index) for index in range(n_trees))
    logger.info("Fitted a forest of %s trees (max_features=%s) on %s rows", n_trees, candidates, dataset.n_rows)
    return TreeEnsemble(trees=trees, mode=MODE_AVERAGED, n_features=dataset.n_features)


def log_loss(target: np.ndarray, probability: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Weighted mean negative log-likelihood."""
    probability = np.clip(probability, 1e-15, 1.0 - 1e-15)
    losses = -(target * np.log(probability) + (1.0 - target) * np.log1p(-probability))
    return float(np.average(losses, weights=weights))


def fit_gbdt(  # pylint: disable=too-many-arguments,too-many-locals
    dataset: Dataset,
    n_rounds: int,
    max_depth: int,
    learning_rate: float = 0.1,
    lambda_l2: float = 1.0,
    gamma_min_gain: float = 0.0,
    subsample: float = 1.0,
    class_weight: str = "none",
    seed: int = 0,
    min_samples_leaf: int = 1,
) -> TreeEnsemble:
    """Second-order gradient boosting on the logistic loss.

    Each round fits a regression tree to ``g = p - y`` and ``h = p * (1 - p)``, with leaf weights
    ``-G / (H + lambda)``, and adds it to the margin scaled by ``learning_rate``.
    """
    _check_trainable(dataset)
    if n_rounds < 1:
        raise ConfigError(f"n_rounds must be at least 1; got {n_rounds}.")
    if not 0.0 < learning_rate <= 1.0:
        raise ConfigError(f"learning_rate must lie in (0, 1]; got {learning_rate}.")
    if lambda_l2 < 0 or gamma_min_gain < 0:
        raise ConfigError("lambda_l2 and gamma_min_gain must be non-negative.")
    if not 0.0 < subsample <= 1.0:
        raise ConfigError(f"subsample must lie in (0, 1]; got {subsample}.")

    target = dataset.target.astype(np.float64)
    weights = class_weights(dataset.target, class_weight)
    prior = float(np.average(target, weights=weights))
    if prior <= 0.0 or prior >= 1.0:
        raise TrainingError("Boosting needs both classes in the training data (degenerate prior).")
    base_score = float(logit(prior))
    criterion = GradientCriterion(lambda_l2, gamma_min_gain)
    builder = TreeBuilder(criterion, max_depth, min_samples_leaf)

    margin = np.full(dataset.n_rows, base_score)
    trees, history = [], []
    n_sample = max(1, int(np.floor(subsample * dataset.n_rows + 0.5)))
    for round_index in range(n_rounds):
        probability = expit(margin)
        counts = np.ones(dataset.n_rows)
        if subsample < 1.0:
            counts = np.zeros(dataset.n_rows)
            counts[stream(seed, "gbdt-subsample", round_index).permutation(dataset.n_rows)[:n_sample]] = 1.0
        gradient = weights * (probability - target) * counts
        hessian = weights * probability * (1.0 - probability) * counts
        tree = builder.build(dataset.values, np.column_stack([gradient, hessian]), counts)
        trees.append(tree)
        margin = margin + learning_rate * tree.predict(dataset.values)
        history.append(log_loss(target, expit(margin), weights))
        logger.debug("Boosting round %s: %s nodes, training logloss %.6f", round_index, tree.n_nodes, history[-1])

    logger.info("Fitted %s boosting rounds on %s rows, final logloss %.6f", n_rounds, dataset.n_rows, history[-1])
    return TreeEnsemble(
        trees=tuple(trees),
        mode=MODE_ADDITIVE,
        n_features=dataset.n_features,
        base_score=base_score,
        shrinkage=learning_rate,
        training_log=tuple(history),
    )


@dataclass(frozen=True, eq=False)
class AdaBoostModel:
    """Discrete AdaBoost: stumps with leaf values in {-1, +1} and their round weights."""

    stumps: Tuple[Tree, ...]
    alphas: Tuple[float, ...]
    prior: float
    n_features: int
    errors: Tuple[float, ...] = ()
    weight_sums: Tuple[float, ...] = ()

    def score(self, X: np.ndarray) -> np.ndarray:
        """Weighted vote ``sum(alpha_t * h_t(x))``."""
        total = np.zeros(np.asarray(X).shape[0])
        for alpha, stump in zip(self.alphas, self.stumps):
            total += alpha * stump.predict(X)
        return total

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """``sigmoid(2 * score)``; the training prior when no round was kept."""
        if not self.stumps:
            return np.full(np.asarray(X).shape[0], self.prior)
        return expit(2.0 * self.score(X))

    def as_ensemble(self) -> TreeEnsemble:
        """Equivalent additive-margin ensemble with leaves ``alpha_t * h_t``, margin ``2 * score``."""
        if not self.stumps:
            return TreeEnsemble(trees=(), mode=MODE_ADDITIVE, n_features=self.n_features, base_score=logit(self.prior))
        return TreeEnsemble(
            trees=tuple(stump.scaled(alpha) for alpha, stump in zip(self.alphas, self.stumps)),
            mode=MODE_ADDITIVE,
            n_features=self.n_features,
            base_score=0.0,
            shrinkage=2.0,
            training_log=self.errors,
        )

    def to_dict(self) -> dict:
        """JSON-ready payload."""
        return {
            "stumps": [stump.to_dict() for stump in self.stumps],
            "alphas": list(self.alphas),
            "prior": self.prior,
            "n_features": self.n_features,
            "errors": list(self.errors),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AdaBoostModel":
        """Inverse of :meth:`to_dict`."""
        return cls(
            stumps=tuple(Tree.from_dict(stump) for stump in payload["stumps"]),
            alphas=tuple(float(alpha) for alpha in payload["alphas"]),
            prior=float(payload["prior"]),
            n_features=int(payload["n_features"]),
            errors=tuple(float(error) for error in payload.get("errors", ())),
        )


def adaboost_alpha(error: float) -> float:
    """Round weight ``0.5 * ln((1 - eps) / eps)`` with ``eps`` clamped away from 0 and 1."""
    error = min(max(error, ADABOOST_EPS_CLAMP), 1.0 - ADABOOST_EPS_CLAMP)
    return 0.5 * float(np.log((1.0 - error) / error))


def fit_adaboost(dataset: Dataset, n_rounds: int, stump_depth: int = 1) -> AdaBoostModel:
    """Discrete AdaBoost over weighted-gini trees of depth ``stump_depth``.

    Stops early when a weak learner's weighted error reaches 0.5, and after a perfect weak learner.
    """
    _check_trainable(dataset)
    if n_rounds < 1:
        raise ConfigError(f"n_rounds must be at least 1; got {n_rounds}.")
    if stump_depth < 1:
        raise ConfigError(f"stump_depth must be at least 1; got {stump_depth}.")
    signed = np.where(dataset.target == 1, 1.0, -1.0)
    weights = np.full(dataset.n_rows, 1.0 / dataset.n_rows)
    counts = np.ones(dataset.n_rows)
    stumps, alphas, errors, sums = [], [], [], []
    for round_index in range(n_rounds):
        fitted = _grow_classifier(dataset, counts, weights * dataset.n_rows, stump_depth, 1, "gini")
        stump = Tree(
            fitted.feature,
            fitted.threshold,
            fitted.left,
            fitted.right,
            np.where(fitted.value >= 0.5, 1.0, -1.0),
            fitted.cover,
            fitted.gain,
        )
        vote = stump.predict(dataset.values)
        error = float(weights[vote != signed].sum())
        if error >= 0.5:
            logger.info("AdaBoost stopped at round %s: weighted error %.4f >= 0.5", round_index, error)
            break
        alpha = adaboost_alpha(error)
        weights = weights * np.exp(-alpha * signed * vote)
        weights /= weights.sum()
        stumps.append(stump)
        alphas.append(alpha)
        errors.append(error)
        sums.append(float(weights.sum()))
        logger.debug("AdaBoost round %s: error %.6f, alpha %.6f", round_index, error, alpha)
        if error <= ADABOOST_EPS_CLAMP:
            logger.info("AdaBoost stopped at round %s: perfect weak learner", round_index)
            break
    logger.info("Fitted AdaBoost with %s rounds on %s rows", len(stumps), dataset.n_rows)
    return AdaBoostModel(
        stumps=tuple(stumps),
        alphas=tuple(alphas),
        prior=float(dataset.target.mean()),
        n_features=dataset.n_features,
        errors=tuple(errors),
        weight_sums=tuple(sums),
    )


def split_gains(trees: Sequence[Tree], n_features: int) -> np.ndarray:
    """Total recorded split gain per feature over ``trees``."""
    totals = np.zeros(n_features)
    for tree in trees:
        internal = ~tree.is_leaf
        np.add.at(totals, tree.feature[internal], tree.gain[internal])
    return totals
