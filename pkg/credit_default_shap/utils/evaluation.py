"""Metric suite, cross validation, algorithm comparison and the boosting depth sweep."""
import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from credit_default_shap.constant import (
    DEFAULT_SEED,
    DEFAULT_TEST_FRACTION,
    DEFAULT_THRESHOLD,
    EXTERNAL_METHODS,
    METHOD_NAMES,
    MODEL_KINDS,
)
from credit_default_shap.utils.dataset import Dataset, SplitPlan, describe_holdout, split, stratified_kfold
from credit_default_shap.utils.errors import ConfigError, CreditModelError, DegenerateMetricWarning, EvaluationError
from credit_default_shap.utils.models import fit_artifact, predict_proba, resolve_hyperparameters
from credit_default_shap.utils.preprocess import PreprocessConfig

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_ERROR = "error"
STATUS_EXTERNAL = "external"


@dataclass(frozen=True)
class ConfusionCounts:
    """Confusion matrix at one threshold."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        """Number of evaluated rows."""
        return self.tp + self.fp + self.fn + self.tn


def confusion(
    labels: Sequence[int], probabilities: Sequence[float], threshold: float = DEFAULT_THRESHOLD
) -> ConfusionCounts:
    """Count outcomes; a row is predicted positive when its probability reaches ``threshold``."""
    labels = np.asarray(labels)
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if len(labels) != len(probabilities):
        raise EvaluationError(f"{len(labels)} labels but {len(probabilities)} probabilities.")
    if len(labels) == 0:
        raise EvaluationError("Cannot evaluate an empty prediction set.")
    if not 0.0 <= threshold <= 1.0:
        raise EvaluationError(f"Threshold must lie in [0, 1]; got {threshold}.")
    predicted = probabilities >= threshold
    actual = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
        tn=int(np.sum(~predicted & ~actual)),
    )


def degenerate_denominators(counts: ConfusionCounts) -> Tuple[str, ...]:
    """Names of the metrics whose denominator is zero."""
    flags = []
    if counts.tp + counts.fp == 0:
        flags.append("precision")
    if counts.tp + counts.fn == 0:
        flags.append("recall")
    return tuple(flags)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean, 0 when both are 0."""
    total = precision + recall
    return 2.0 * precision * recall / total if total > 0 else 0.0


def metrics(counts: ConfusionCounts) -> Tuple[float, float, float, float]:
    """Return (accuracy, precision, recall, f1); a zero denominator gives 0 and a warning."""
    if counts.total == 0:
        raise EvaluationError("Cannot compute metrics on zero rows.")
    degenerate = degenerate_denominators(counts)
    if degenerate:
        message = f"{' and '.join(degenerate)} denominator is zero; reported as 0"
        logger.warning(message)
        warnings.warn(message, DegenerateMetricWarning, stacklevel=2)
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return accuracy, precision, recall, f1_score(precision, recall)


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Area under the ROC curve in Mann-Whitney form; tied (positive, negative) pairs count one half."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if len(labels) != len(scores):
        raise EvaluationError(f"{len(labels)} labels but {len(scores)} scores.")
    positive = labels == 1
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("AUC needs at least one positive and one negative row.")
    ranks = rankdata(scores, method="average")
    wins = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(wins / (n_pos * n_neg))


@dataclass(frozen=True)
class MetricsRecord:  # pylint: disable=too-many-instance-attributes
    """One evaluated (method, split) result; metric fields are None for error and placeholder rows."""

    method: str
    kind: str
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    auc: Optional[float] = None
    threshold: float = DEFAULT_THRESHOLD
    split: str = ""
    hyperparameters: Dict[str, Any] = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    fold: Optional[str] = None
    degenerate: Tuple[str, ...] = ()
    status: str = STATUS_OK
    error: Optional[str] = None
    folds: Tuple["MetricsRecord", ...] = ()

    def to_dict(self) -> dict:
        """JSON-ready form, fold records nested."""
        payload = {
            "method": self.method,
            "kind": self.kind,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "threshold": self.threshold,
            "split": self.split,
            "hyperparameters": dict(self.hyperparameters),
            "seed": self.seed,
            "fold": self.fold,
            "degenerate": list(self.degenerate),
            "status": self.status,
            "error": self.error,
        }
        if self.folds:
            payload["folds"] = [record.to_dict() for record in self.folds]
        return payload


def evaluate(  # pylint: disable=too-many-arguments
    labels: np.ndarray,
    probabilities: np.ndarray,
    method: str,
    kind: str,
    threshold: float = DEFAULT_THRESHOLD,
    split_descriptor: str = "",
    hyperparameters: Optional[Dict[str, Any]] = None,
    seed: int = DEFAULT_SEED,
) -> MetricsRecord:
    """Score one set of predictions."""
    counts = confusion(labels, probabilities, threshold)
    accuracy, precision, recall, f1 = metrics(counts)
    return MetricsRecord(
        method=method,
        kind=kind,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=roc_auc(labels, probabilities),
        threshold=threshold,
        split=split_descriptor,
        hyperparameters=dict(hyperparameters or {}),
        seed=seed,
        degenerate=degenerate_denominators(counts),
    )


@dataclass(frozen=True)
class PipelineSpec:
    """Preprocessing plus one model kind; external kinds only produce placeholder rows."""

    kind: str
    hyperparameters: Dict[str, Any] = field(default_factory=dict)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    name: Optional[str] = None

    def __post_init__(self):
        """Check the kind."""
        if self.kind not in MODEL_KINDS and self.kind not in EXTERNAL_METHODS:
            known = ", ".join(MODEL_KINDS + tuple(EXTERNAL_METHODS))
            raise ConfigError(f"Unknown model kind {self.kind}; expected one of {known}.")

    @property
    def is_external(self) -> bool:
        """True for methods listed only as placeholders."""
        return self.kind in EXTERNAL_METHODS

    @property
    def display_name(self) -> str:
        """Row label in comparison tables."""
        if self.name:
            return self.name
        return METHOD_NAMES.get(self.kind) or EXTERNAL_METHODS[self.kind]

    def with_hyperparameters(self, **overrides) -> "PipelineSpec":
        """Copy with some hyperparameters replaced."""
        return replace(self, hyperparameters={**self.hyperparameters, **overrides})


@dataclass(frozen=True)
class SplitSpec:
    """Either a holdout fraction or a k-fold count, never both."""

    test_fraction: Optional[float] = DEFAULT_TEST_FRACTION
    folds: Optional[int] = None
    seed: int = DEFAULT_SEED
    stratified: bool = True

    def __post_init__(self):
        """Require exactly one split mode."""
        if (self.test_fraction is None) == (self.folds is None):
            raise ConfigError("Give exactly one of test_fraction and folds.")

    def describe(self) -> str:
        """Short descriptor recorded in reports."""
        if self.folds is not None:
            return f"{'stratified ' if self.stratified else ''}{self.folds}-fold seed={self.seed}"
        return describe_holdout(self.test_fraction, self.seed, self.stratified)


def _fit_and_score(
    train: Dataset, test: Dataset, spec: PipelineSpec, seed: int, threshold: float, descriptor: str
) -> MetricsRecord:
    artifact = fit_artifact(train, spec.kind, spec.hyperparameters, spec.preprocess, seed)
    probabilities = predict_proba(artifact, test)
    return evaluate(
        test.target, probabilities, spec.display_name, spec.kind, threshold, descriptor, artifact.hyperparameters, seed
    )


def mean_record(records: Sequence[MetricsRecord], descriptor: str) -> MetricsRecord:
    """Unweighted mean over folds; f1 is recomputed from the mean precision and recall."""
    first = records[0]
    precision = float(np.mean([record.precision for record in records]))
    recall = float(np.mean([record.recall for record in records]))
    degenerate = tuple(sorted({flag for record in records for flag in record.degenerate}))
    return replace(
        first,
        accuracy=float(np.mean([record.accuracy for record in records])),
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        auc=float(np.mean([record.auc for record in records])),
        split=descriptor,
        fold="mean",
        degenerate=degenerate,
    )


def cross_validate(
    dataset: Dataset,
    spec: PipelineSpec,
    plan: SplitPlan,
    seed: int = DEFAULT_SEED,
    threshold: float = DEFAULT_THRESHOLD,
) -> List[MetricsRecord]:
    """Fit preprocessing and the model on each fold's training rows and score the held-out fold.

    Returns:
        list: ``k`` per-fold records followed by their mean record.
    """
    if spec.is_external:
        raise ConfigError(f"{spec.display_name} is not implemented and cannot be cross validated.")
    records = []
    for fold in range(plan.k):
        train_rows, test_rows = plan.fold_indices(fold)
        logger.debug("Fold %s: %s training rows, %s held-out rows", fold, len(train_rows), len(test_rows))
        try:
            record = _fit_and_score(
                dataset.take(train_rows), dataset.take(test_rows), spec, seed, threshold, plan.describe()
            )
        except CreditModelError as err:
            raise err.annotate(fold=fold) from err
        records.append(replace(record, fold=str(fold)))
    return records + [mean_record(records, plan.describe())]


def run_spec(
    dataset: Dataset, spec: PipelineSpec, split_spec: SplitSpec, threshold: float = DEFAULT_THRESHOLD
) -> MetricsRecord:
    """Evaluate one pipeline on the split described by ``split_spec``; k-fold results carry their folds."""
    if split_spec.folds is not None:
        plan = stratified_kfold(dataset, split_spec.folds, split_spec.seed)
        records = cross_validate(dataset, spec, plan, split_spec.seed, threshold)
        return replace(records[-1], folds=tuple(records[:-1]))
    train, test = split(dataset, split_spec.test_fraction, split_spec.seed, split_spec.stratified)
    return _fit_and_score(train, test, spec, split_spec.seed, threshold, split_spec.describe())


def compare_algorithms(
    dataset: Dataset,
    specs: Sequence[PipelineSpec],
    split_spec: SplitSpec,
    threshold: float = DEFAULT_THRESHOLD,
) -> List[MetricsRecord]:
    """One record per spec on a shared split, in the given order.

    A failing spec yields an error row and the run continues; external methods yield placeholder rows.
    """
    if not specs:
        raise ConfigError("compare needs at least one model spec.")
    rows = []
    for spec in specs:
        if spec.is_external:
            rows.append(
                MetricsRecord(
                    method=spec.display_name,
                    kind=spec.kind,
                    threshold=threshold,
                    split=split_spec.describe(),
                    seed=split_spec.seed,
                    status=STATUS_EXTERNAL,
                )
            )
            continue
        try:
            record = run_spec(dataset, spec, split_spec, threshold)
            logger.info("%s: acc %.4f f1 %.4f auc %.4f", spec.display_name, record.accuracy, record.f1, record.auc)
        except CreditModelError as err:
            logger.error("%s failed: %s", spec.display_name, err)
            record = MetricsRecord(
                method=spec.display_name,
                kind=spec.kind,
                threshold=threshold,
                split=split_spec.describe(),
                hyperparameters=dict(spec.hyperparameters),
                seed=split_spec.seed,
                status=STATUS_ERROR,
                error=f"{err.error_class}: {err}",
            )
        rows.append(record)
    return rows


def best_record(records: Sequence[MetricsRecord]) -> Optional[MetricsRecord]:
    """Highest-F1 successful record; ties go to the earlier row."""
    best = None
    for record in records:
        if record.status == STATUS_OK and (best is None or record.f1 > best.f1):
            best = record
    return best


@dataclass(frozen=True)
class SweepResult:
    """Per-depth records (in the requested order) and the depth with the highest F1."""

    depths: Tuple[int, ...]
    records: Tuple[MetricsRecord, ...]
    selected_depth: int


def depth_sweep(
    dataset: Dataset,
    spec: PipelineSpec,
    depths: Sequence[int],
    split_spec: SplitSpec,
    threshold: float = DEFAULT_THRESHOLD,
) -> SweepResult:
    """Train the same boosting pipeline at every ``max_depth`` and select the best F1 (ties to the smaller depth)."""
    if not depths:
        raise ConfigError("depth_sweep needs at least one depth.")
    if spec.kind != "gbdt":
        raise ConfigError(f"depth_sweep runs on gbdt specs; got {spec.kind}.")
    resolve_hyperparameters(spec.kind, spec.hyperparameters)
    records = []
    for depth in depths:
        record = run_spec(dataset, spec.with_hyperparameters(max_depth=int(depth)), split_spec, threshold)
        logger.info("max_depth %s: f1 %.4f", depth, record.f1)
        records.append(record)
    best_f1 = max(record.f1 for record in records)
    selected = min(int(depth) for depth, record in zip(depths, records) if record.f1 == best_f1)
    return SweepResult(depths=tuple(int(depth) for depth in depths), records=tuple(records), selected_depth=selected)


DEFAULT_COMPARE_KINDS = ("logistic", "tree", "forest", "knn", "gnb", "adaboost", "gbdt")


def default_specs(preprocess: Optional[PreprocessConfig] = None) -> List[PipelineSpec]:
    """The seven implemented methods in the reference table order."""
    return [PipelineSpec(kind=kind, preprocess=preprocess or PreprocessConfig()) for kind in DEFAULT_COMPARE_KINDS]
