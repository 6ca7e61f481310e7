"""Training-fitted preprocessing: imputation, feature selection, SMOTE and standardization.

Every ``fit_*`` function looks at training rows only and returns an immutable parameter record; the matching
``apply_*`` function replays it on any dataset with the same columns.
"""
import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import rankdata

from credit_default_shap.constant import (
    CORRELATION_THRESHOLD,
    DEFAULT_MAX_ONEHOT_CARDINALITY,
    DEFAULT_SEED,
    ENCODING_ONE_HOT,
    INFO_GAIN_BINS,
    SMOTE_DEFAULT_K,
    SMOTE_DEFAULT_RATIO,
)
from credit_default_shap.utils.dataset import CategoricalEncoding, Dataset, apply_encoding, fit_encoding
from credit_default_shap.utils.errors import ConfigError, ImputerError, ResampleError, SchemaError, SmoteWarning
from credit_default_shap.utils.rng import stream

logger = logging.getLogger(__name__)

SELECTION_METHODS = ("correlation-filter", "information-gain")


def _check_names(dataset: Dataset, names: Sequence[str], what: str):
    if tuple(dataset.feature_names) != tuple(names):
        raise SchemaError(
            f"{what} was fitted on {len(names)} columns but the dataset has {dataset.n_features} "
            "(or the names differ)."
        )


def _require_complete(dataset: Dataset, what: str):
    if not dataset.is_numeric:
        raise SchemaError(f"{what} needs encoded (numeric) columns; found {', '.join(dataset.categorical_columns)}.")
    missing = np.isnan(dataset.values).any(axis=0)
    if missing.any():
        names = [name for name, flag in zip(dataset.feature_names, missing) if flag]
        raise SchemaError(f"{what} needs imputed data; missing values in {', '.join(names[:5])}.")


# ------------------------------------------------------------------------------
# STANDARDIZATION
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class ScalerParams:
    """Per-column mean and population standard deviation."""

    feature_names: Tuple[str, ...]
    mean: Tuple[float, ...]
    std: Tuple[float, ...]


def fit_scaler(dataset: Dataset) -> ScalerParams:
    """Fit z-score parameters (population standard deviation)."""
    _require_complete(dataset, "Scaler")
    return ScalerParams(
        feature_names=dataset.feature_names,
        mean=tuple(float(value) for value in dataset.values.mean(axis=0)),
        std=tuple(float(value) for value in dataset.values.std(axis=0)),
    )


def apply_scaler(dataset: Dataset, params: ScalerParams) -> Dataset:
    """Apply ``z = (x - mean) / std``; constant training columns map to 0."""
    _check_names(dataset, params.feature_names, "Scaler")
    mean = np.asarray(params.mean, dtype=np.float64)
    std = np.asarray(params.std, dtype=np.float64)
    constant = std == 0.0
    scaled = (dataset.values - mean) / np.where(constant, 1.0, std)
    scaled[:, constant] = 0.0
    return dataset.with_values(scaled, dataset.feature_names)


# ------------------------------------------------------------------------------
# IMPUTATION
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class ImputerParams:
    """Training medians and which columns get a ``<col>_missing`` indicator."""

    feature_names: Tuple[str, ...]
    fill_values: Tuple[float, ...]
    indicators: Tuple[bool, ...]

    @property
    def output_names(self) -> List[str]:
        """Column names after imputation."""
        extra = [f"{name}_missing" for name, flag in zip(self.feature_names, self.indicators) if flag]
        return list(self.feature_names) + extra


def fit_imputer(dataset: Dataset, add_indicators: bool = False) -> ImputerParams:
    """Fit per-column medians of the non-missing training values.

    Args:
        dataset (Dataset): Encoded training rows.
        add_indicators (bool): Append a 0/1 indicator for every column with missing training values.

    Returns:
        ImputerParams: Fill values and indicator flags.
    """
    if not dataset.is_numeric:
        raise SchemaError("Imputer needs encoded (numeric) columns.")
    missing = np.isnan(dataset.values)
    empty = missing.all(axis=0) if dataset.n_rows else np.ones(dataset.n_features, dtype=bool)
    if empty.any():
        names = [name for name, flag in zip(dataset.feature_names, empty) if flag]
        raise ImputerError(f"Column {names[0]} has no non-missing training values.", {"column": names[0]})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)
        medians = np.nanmedian(dataset.values, axis=0) if dataset.n_features else np.empty(0)
    flags = missing.any(axis=0) if add_indicators else np.zeros(dataset.n_features, dtype=bool)
    return ImputerParams(
        feature_names=dataset.feature_names,
        fill_values=tuple(float(value) for value in medians),
        indicators=tuple(bool(flag) for flag in flags),
    )


def apply_imputer(dataset: Dataset, params: ImputerParams) -> Dataset:
    """Replace missing cells by the stored medians and append the indicator columns."""
    _check_names(dataset, params.feature_names, "Imputer")
    missing = np.isnan(dataset.values)
    if not missing.any() and not any(params.indicators):
        return dataset
    filled = np.where(missing, np.asarray(params.fill_values, dtype=np.float64), dataset.values)
    flags = np.asarray(params.indicators, dtype=bool)
    if flags.any():
        filled = np.hstack([filled, missing[:, flags].astype(np.float64)])
    return dataset.with_values(filled, params.output_names)


# ------------------------------------------------------------------------------
# SMOTE
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class SmoteConfig:
    """Oversampling settings."""

    k_neighbors: int = SMOTE_DEFAULT_K
    target_ratio: float = SMOTE_DEFAULT_RATIO
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        """Validate the ranges."""
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be at least 1; got {self.k_neighbors}.")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ConfigError(f"target_ratio must lie in (0, 1]; got {self.target_ratio}.")


def smote_deficit(n_minority: int, n_majority: int, target_ratio: float) -> int:
    """Number of synthetic rows needed to bring minority/majority to ``target_ratio``."""
    return max(int(np.floor(target_ratio * n_majority + 0.5)) - n_minority, 0)


def smote(dataset: Dataset, config: SmoteConfig) -> Dataset:
    """Append synthetic minority rows ``p + lam * (q - p)`` with ``q`` among the k nearest minority neighbors of ``p``.

    Base rows are taken round-robin over the minority class; each base row draws its neighbors and ``lam`` from
    its own derived stream. Original rows are kept unchanged and in order; synthetic rows get fresh negative ids.
    """
    _require_complete(dataset, "SMOTE")
    negatives, positives = dataset.class_counts()
    minority_label = 1 if positives <= negatives else 0
    minority = np.flatnonzero(dataset.target == minority_label)
    n_min, n_maj = len(minority), dataset.n_rows - len(minority)
    if n_min < 2:
        raise ResampleError(f"SMOTE needs at least 2 minority rows; got {n_min}.")
    deficit = smote_deficit(n_min, n_maj, config.target_ratio)
    if deficit == 0:
        logger.info("SMOTE: classes already at ratio %s, nothing to add", config.target_ratio)
        return dataset

    k = config.k_neighbors
    if k >= n_min:
        k = n_min - 1
        message = f"k_neighbors={config.k_neighbors} clamped to {k} for a minority class of {n_min} rows"
        logger.warning("SMOTE: %s", message)
        warnings.warn(message, SmoteWarning, stacklevel=2)

    points = dataset.values[minority]
    _, found = cKDTree(points).query(points, k=k + 1)
    found = np.asarray(found).reshape(n_min, k + 1)
    not_self = found != np.arange(n_min)[:, None]
    # duplicated points can hide the row itself; drop the farthest candidate instead
    no_self_hit = not_self.all(axis=1)
    not_self[no_self_hit, -1] = False
    neighbors = found[not_self].reshape(n_min, k)

    per_base = np.full(n_min, deficit // n_min)
    per_base[: deficit % n_min] += 1
    synthetic = np.empty((deficit, dataset.n_features))
    for base in np.flatnonzero(per_base):
        generator = stream(config.seed, "smote", int(base))
        picks = neighbors[base, generator.integers(0, k, size=per_base[base])]
        lam = generator.random(per_base[base])
        rows = np.arange(base, deficit, n_min)
        synthetic[rows] = points[base] + lam[:, None] * (points[picks] - points[base])

    start = min(int(dataset.row_ids.min()), 0) - 1
    new_ids = start - np.arange(deficit)
    logger.info(
        "SMOTE: added %s synthetic rows of class %s (k=%s, %s -> %s minority)",
        deficit,
        minority_label,
        k,
        n_min,
        n_min + deficit,
    )
    return dataset.append_rows(synthetic, np.full(deficit, minority_label), new_ids)


# ------------------------------------------------------------------------------
# FEATURE SELECTION
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class SelectionConfig:
    """Feature selection settings; ``method=None`` keeps every column."""

    method: Optional[str] = None
    threshold: float = CORRELATION_THRESHOLD
    top_m: Optional[int] = None
    n_bins: int = INFO_GAIN_BINS

    def __post_init__(self):
        """Validate the method and its parameters."""
        if self.method is not None and self.method not in SELECTION_METHODS:
            raise ConfigError(
                f"Unknown selection method {self.method}; expected one of {', '.join(SELECTION_METHODS)}."
            )
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"Correlation threshold must lie in (0, 1]; got {self.threshold}.")
        if self.top_m is not None and self.top_m < 1:
            raise ConfigError(f"top_m must be at least 1; got {self.top_m}.")
        if self.n_bins < 2:
            raise ConfigError(f"n_bins must be at least 2; got {self.n_bins}.")


def equal_frequency_bins(column: np.ndarray, n_bins: int = INFO_GAIN_BINS) -> np.ndarray:
    """Discretize into ``n_bins`` equal-frequency bins; tied values always share a bin."""
    n = len(column)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    ranks = rankdata(column, method="min").astype(np.int64)
    return ((ranks - 1) * n_bins) // n


def mutual_information(codes: np.ndarray, target: np.ndarray) -> float:
    """Mutual information in bits between a discrete column and a binary target."""
    n = len(codes)
    if n == 0:
        return 0.0
    _, inverse = np.unique(codes, return_inverse=True)
    joint = np.zeros((inverse.max() + 1, 2))
    np.add.at(joint, (inverse, np.asarray(target, dtype=np.int64)), 1.0)
    joint /= n
    outer = joint.sum(axis=1, keepdims=True) * joint.sum(axis=0, keepdims=True)
    nonzero = joint > 0
    return float(np.sum(joint[nonzero] * np.log2(joint[nonzero] / outer[nonzero])))


def information_gain(dataset: Dataset, n_bins: int = INFO_GAIN_BINS) -> np.ndarray:
    """Mutual information of every column (binned) with the target."""
    return np.array(
        [
            mutual_information(equal_frequency_bins(dataset.values[:, col], n_bins), dataset.target)
            for col in range(dataset.n_features)
        ]
    )


def _abs_correlation(values: np.ndarray) -> np.ndarray:
    centered = values - values.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    safe = np.where(norms == 0.0, 1.0, norms)
    corr = (centered.T @ centered) / np.outer(safe, safe)
    corr[norms == 0.0, :] = 0.0
    corr[:, norms == 0.0] = 0.0
    return np.abs(np.clip(corr, -1.0, 1.0))


def select_features(
    dataset: Dataset,
    method: str,
    threshold: float = CORRELATION_THRESHOLD,
    top_m: Optional[int] = None,
    n_bins: int = INFO_GAIN_BINS,
) -> List[str]:
    """Return the names of the retained columns.

    ``correlation-filter`` visits columns by decreasing absolute correlation with the target (ties to the
    lower index) and drops any column correlated above ``threshold`` with an already kept one; kept names come
    back in dataset order. ``information-gain`` returns the ``top_m`` columns by mutual information with the
    target, best first.
    """
    config = SelectionConfig(method=method, threshold=threshold, top_m=top_m, n_bins=n_bins)
    _require_complete(dataset, "Feature selection")
    if config.method == "correlation-filter":
        with_target = np.column_stack([dataset.values, dataset.target.astype(np.float64)])
        corr = _abs_correlation(with_target)
        to_target = corr[:-1, -1]
        kept: List[int] = []
        for col in sorted(range(dataset.n_features), key=lambda c: (-to_target[c], c)):
            if all(corr[col, other] <= config.threshold for other in kept):
                kept.append(col)
        dropped = dataset.n_features - len(kept)
        logger.info(
            "Correlation filter (|r| > %s) dropped %s of %s columns", config.threshold, dropped, dataset.n_features
        )
        return [dataset.feature_names[col] for col in sorted(kept)]

    gains = information_gain(dataset, config.n_bins)
    ranked = sorted(range(dataset.n_features), key=lambda c: (-gains[c], c))
    keep = ranked[: config.top_m] if config.top_m is not None else ranked
    logger.info("Information gain kept %s of %s columns", len(keep), dataset.n_features)
    return [dataset.feature_names[col] for col in keep]


# ------------------------------------------------------------------------------
# PIPELINE
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class PreprocessConfig:
    """What the training pipeline does before fitting; ``scale=None`` scales only for logistic and knn."""

    encoding: str = ENCODING_ONE_HOT
    max_onehot_cardinality: int = DEFAULT_MAX_ONEHOT_CARDINALITY
    missing_indicators: bool = False
    scale: Optional[bool] = None
    smote: Optional[SmoteConfig] = None
    selection: SelectionConfig = field(default_factory=SelectionConfig)

    def scales(self, kind: str) -> bool:
        """Whether ``kind`` trains on standardized columns."""
        return self.scale if self.scale is not None else kind in ("logistic", "knn")


@dataclass(frozen=True)
class Provenance:
    """Everything needed to replay training-time preprocessing on new rows."""

    input_feature_names: Tuple[str, ...]
    encoding: CategoricalEncoding
    imputer: ImputerParams
    selected: Optional[Tuple[str, ...]]
    smote: Optional[SmoteConfig]
    synthetic_rows: int
    scaler: Optional[ScalerParams]

    @property
    def feature_names(self) -> Tuple[str, ...]:
        """Column names the model is trained on."""
        if self.selected is not None:
            return self.selected
        return tuple(self.imputer.output_names)

    def to_dict(self) -> dict:
        """JSON-ready form."""
        return {
            "input_feature_names": list(self.input_feature_names),
            "encoding": self.encoding.to_dict(),
            "imputer": {key: list(value) for key, value in asdict(self.imputer).items()},
            "selection": list(self.selected) if self.selected is not None else None,
            "smote": {**asdict(self.smote), "synthetic_rows": self.synthetic_rows} if self.smote else None,
            "scaler": {key: list(value) for key, value in asdict(self.scaler).items()} if self.scaler else None,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Provenance":
        """Inverse of :meth:`to_dict`."""
        imputer = payload["imputer"]
        smote_payload = dict(payload["smote"]) if payload.get("smote") else None
        synthetic_rows = int(smote_payload.pop("synthetic_rows", 0)) if smote_payload else 0
        scaler = payload.get("scaler")
        return cls(
            input_feature_names=tuple(payload["input_feature_names"]),
            encoding=CategoricalEncoding.from_dict(payload["encoding"]),
            imputer=ImputerParams(
                feature_names=tuple(imputer["feature_names"]),
                fill_values=tuple(float(value) for value in imputer["fill_values"]),
                indicators=tuple(bool(flag) for flag in imputer["indicators"]),
            ),
            selected=tuple(payload["selection"]) if payload.get("selection") is not None else None,
            smote=SmoteConfig(**smote_payload) if smote_payload else None,
            synthetic_rows=synthetic_rows,
            scaler=(
                ScalerParams(
                    feature_names=tuple(scaler["feature_names"]),
                    mean=tuple(float(value) for value in scaler["mean"]),
                    std=tuple(float(value) for value in scaler["std"]),
                )
                if scaler
                else None
            ),
        )


def fit_preprocessing(train: Dataset, config: PreprocessConfig, kind: str) -> Tuple[Dataset, Provenance]:
    """Run encode, impute, select, SMOTE and scale on training rows, in that order.

    Args:
        train (Dataset): Loaded training rows (categoricals not yet encoded).
        config (PreprocessConfig): Pipeline settings.
        kind (str): Model kind, deciding whether columns are scaled by default.

    Returns:
        tuple: Model-ready training dataset and the provenance to replay on other rows.
    """
    train.check_fittable()
    encoding = fit_encoding(train, config.encoding, config.max_onehot_cardinality)
    data = apply_encoding(train, encoding)
    imputer = fit_imputer(data, config.missing_indicators)
    data = apply_imputer(data, imputer)
    logger.info("Encoded and imputed %s training rows into %s columns", data.n_rows, data.n_features)

    selected = None
    if config.selection.method is not None:
        selection = config.selection
        selected = tuple(
            select_features(data, selection.method, selection.threshold, selection.top_m, selection.n_bins)
        )
        data = data.select_columns(selected)

    synthetic_rows = 0
    if config.smote is not None:
        before = data.n_rows
        data = smote(data, config.smote)
        synthetic_rows = data.n_rows - before

    scaler = None
    if config.scales(kind):
        scaler = fit_scaler(data)
        data = apply_scaler(data, scaler)

    provenance = Provenance(
        input_feature_names=train.feature_names,
        encoding=encoding,
        imputer=imputer,
        selected=selected,
        smote=config.smote,
        synthetic_rows=synthetic_rows,
        scaler=scaler,
    )
    return data, provenance


def apply_preprocessing(dataset: Dataset, provenance: Provenance) -> Dataset:
    """Replay the fitted preprocessing (everything except SMOTE) on new rows."""
    if tuple(dataset.feature_names) != provenance.input_feature_names:
        missing = [name for name in provenance.input_feature_names if name not in dataset.feature_names]
        detail = f"missing {', '.join(missing[:5])}" if missing else "different column order or extra columns"
        raise SchemaError(f"Rows do not match the model's input columns ({detail}).")
    data = apply_imputer(apply_encoding(dataset, provenance.encoding), provenance.imputer)
    if provenance.selected is not None:
        data = data.select_columns(provenance.selected)
    if provenance.scaler is not None:
        data = apply_scaler(data, provenance.scaler)
    return data
