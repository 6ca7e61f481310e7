"""Load, type, encode, aggregate and split Home-Credit-shaped tabular data."""
import csv
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from credit_default_shap.constant import (
    AGGREGATIONS,
    COLUMN_CATEGORICAL,
    COLUMN_KINDS,
    COLUMN_NUMERIC,
    DEFAULT_CARDINALITY_THRESHOLD,
    DEFAULT_ID_COLUMN,
    DEFAULT_MAX_ONEHOT_CARDINALITY,
    DEFAULT_SENTINELS,
    DEFAULT_TARGET_COLUMN,
    ENCODING_FREQUENCY,
    ENCODING_ONE_HOT,
)
from credit_default_shap.utils.errors import ConfigError, DataIOError, ParseError, SchemaError, SplitError
from credit_default_shap.utils.io import PathLike, atomic_write_text
from credit_default_shap.utils.rng import stream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemaConfig:
    """How to read the main application table.

    ``categorical_columns=None`` switches on the cardinality rule; ``sentinel_missing=None`` applies the
    default sentinels to whichever of their columns are present. ``require_target=False`` loads unlabeled rows
    (prediction input) with target 0.
    """

    target_column: str = DEFAULT_TARGET_COLUMN
    id_column: str = DEFAULT_ID_COLUMN
    categorical_columns: Optional[Tuple[str, ...]] = None
    cardinality_threshold: int = DEFAULT_CARDINALITY_THRESHOLD
    sentinel_missing: Optional[Mapping[str, float]] = None
    require_target: bool = True

    def resolve_sentinels(self, header: Sequence[str]) -> Dict[str, float]:
        """Validate the sentinel map against the header and return the sentinels to apply.

        Args:
            header (list): Column names of the file.

        Returns:
            dict: Column name to the value treated as missing.
        """
        if self.sentinel_missing is None:
            return {name: value for name, value in DEFAULT_SENTINELS.items() if name in header}
        unknown = [name for name in self.sentinel_missing if name not in header]
        if unknown:
            raise SchemaError(f"Sentinel column(s) {', '.join(unknown)} not found in header.")
        return {name: float(value) for name, value in self.sentinel_missing.items()}

    def validate(self, header: Sequence[str]):
        """Check that the target and id columns exist in ``header``."""
        for role, name in (("target", self.target_column), ("id", self.id_column)):
            if name not in header and (role == "id" or self.require_target):
                raise SchemaError(f"The {role} column {name} was not found in the header.")
        if self.target_column == self.id_column:
            raise SchemaError("The target and id columns must differ.")
        if self.cardinality_threshold < 0:
            raise ConfigError("cardinality_threshold must be non-negative.")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column-typed feature matrix with a binary target.

    Categorical columns hold label indices into ``categories[name]`` until they are encoded; missing cells
    are NaN in every column.
    """

    feature_names: Tuple[str, ...]
    column_kinds: Tuple[str, ...]
    values: np.ndarray
    target: np.ndarray
    row_ids: np.ndarray
    categories: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    target_name: str = DEFAULT_TARGET_COLUMN
    id_name: str = DEFAULT_ID_COLUMN

    def __post_init__(self):
        """Freeze the arrays and check the structural invariants."""
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            values = values.reshape(len(values), -1) if values.size else values.reshape(0, len(self.feature_names))
        target = np.asarray(self.target)
        row_ids = np.array(self.row_ids, dtype=np.int64)
        names = tuple(str(name) for name in self.feature_names)
        kinds = tuple(self.column_kinds)

        if not values.shape[0] == len(target) == len(row_ids):
            raise SchemaError(
                f"Row counts differ: values {values.shape[0]}, target {len(target)}, row_ids {len(row_ids)}."
            )
        if values.shape[1] != len(names) or len(kinds) != len(names):
            raise SchemaError(
                f"Column counts differ: values {values.shape[1]}, names {len(names)}, kinds {len(kinds)}."
            )
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise SchemaError(f"Duplicate feature name(s): {', '.join(duplicates)}.")
        bad_kinds = sorted(set(kinds) - set(COLUMN_KINDS))
        if bad_kinds:
            raise SchemaError(f"Unknown column kind(s): {', '.join(bad_kinds)}.")
        if len(target) and not np.isin(target, (0, 1)).all():
            raise SchemaError("Target must contain only 0 and 1.")
        categorical = {name for name, kind in zip(names, kinds) if kind == COLUMN_CATEGORICAL}
        stray = sorted(set(self.categories) - categorical)
        if stray:
            raise SchemaError(f"Categories given for non-categorical column(s): {', '.join(stray)}.")

        target = target.astype(np.int8)
        for array in (values, target, row_ids):
            array.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "column_kinds", kinds)
        object.__setattr__(self, "categories", {name: tuple(labels) for name, labels in self.categories.items()})

    @property
    def n_rows(self) -> int:
        """Number of rows."""
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        """Number of feature columns."""
        return self.values.shape[1]

    @property
    def categorical_columns(self) -> List[str]:
        """Names of the columns still holding label indices."""
        return [name for name, kind in zip(self.feature_names, self.column_kinds) if kind == COLUMN_CATEGORICAL]

    @property
    def is_numeric(self) -> bool:
        """True once every column is numeric (categoricals encoded)."""
        return all(kind == COLUMN_NUMERIC for kind in self.column_kinds)

    def class_counts(self) -> Tuple[int, int]:
        """Return (negative count, positive count)."""
        positives = int(self.target.sum())
        return self.n_rows - positives, positives

    def check_fittable(self):
        """Raise unless both classes are present, which every fit operation requires."""
        negatives, positives = self.class_counts()
        if negatives == 0 or positives == 0:
            raise SchemaError(f"Need at least one row of each class to fit; got {negatives} / {positives}.")

    def column_index(self, name: str) -> int:
        """Position of a feature column."""
        try:
            return self.feature_names.index(name)
        except ValueError as err:
            raise SchemaError(f"Column {name} not found.") from err

    def column(self, name: str) -> np.ndarray:
        """Values of a single column."""
        return self.values[:, self.column_index(name)]

    def take(self, indices: Iterable[int]) -> "Dataset":
        """Row subset in the given order."""
        indices = np.asarray(indices, dtype=np.int64)
        return replace(
            self, values=self.values[indices], target=self.target[indices], row_ids=self.row_ids[indices]
        )

    def select_columns(self, names: Sequence[str]) -> "Dataset":
        """Column subset in the given order."""
        positions = [self.column_index(name) for name in names]
        kinds = tuple(self.column_kinds[pos] for pos in positions)
        categories = {name: labels for name, labels in self.categories.items() if name in names}
        return replace(
            self,
            values=self.values[:, positions],
            feature_names=tuple(names),
            column_kinds=kinds,
            categories=categories,
        )

    def with_values(
        self, values: np.ndarray, feature_names: Sequence[str], column_kinds: Optional[Sequence[str]] = None
    ) -> "Dataset":
        """Same rows and target, new (numeric by default) feature columns."""
        kinds = tuple(column_kinds) if column_kinds is not None else (COLUMN_NUMERIC,) * len(feature_names)
        categories = {
            name: self.categories[name]
            for name, kind in zip(feature_names, kinds)
            if kind == COLUMN_CATEGORICAL and name in self.categories
        }
        return replace(
            self, values=values, feature_names=tuple(feature_names), column_kinds=kinds, categories=categories
        )

    def append_rows(self, values: np.ndarray, target: np.ndarray, row_ids: np.ndarray) -> "Dataset":
        """Append rows after the existing ones."""
        return replace(
            self,
            values=np.vstack([self.values, np.asarray(values, dtype=np.float64).reshape(-1, self.n_features)]),
            target=np.concatenate([self.target, np.asarray(target, dtype=np.int8)]),
            row_ids=np.concatenate([self.row_ids, np.asarray(row_ids, dtype=np.int64)]),
        )

    def to_frame(self) -> pd.DataFrame:
        """Tabular view with categorical labels restored and the id/target columns in front/back."""
        columns = {self.id_name: self.row_ids}
        for position, name in enumerate(self.feature_names):
            column = self.values[:, position]
            if self.column_kinds[position] == COLUMN_CATEGORICAL:
                labels = np.array(self.categories.get(name, ()), dtype=object)
                restored = np.full(len(column), np.nan, dtype=object)
                present = ~np.isnan(column)
                restored[present] = labels[column[present].astype(np.int64)]
                columns[name] = restored
            else:
                columns[name] = column
        columns[self.target_name] = self.target.astype(np.int64)
        return pd.DataFrame(columns)


def _read_frame(path: Path) -> pd.DataFrame:
    """Read every cell as text, keeping empty fields as empty strings."""
    try:
        return pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    except pd.errors.EmptyDataError as err:
        raise ParseError(f"{path} is empty; a header row is required.") from err
    except pd.errors.ParserError as err:
        match = re.search(r"line (\d+)", str(err))
        line = int(match.group(1)) if match else None
        raise ParseError(f"Malformed row at line {line} of {path}: {err}", {"row": line}) from err
    except UnicodeDecodeError as err:
        raise ParseError(f"{path} is not valid UTF-8: {err}") from err


def _check_field_counts(path: Path, width: int):
    """Reject the first data row whose field count differs from the header width."""
    try:
        with path.open(newline="", encoding="utf-8-sig") as handle:
            reader = csv.reader(handle)
            next(reader, None)
            for row in reader:
                if row and len(row) != width:
                    line = reader.line_num
                    raise ParseError(
                        f"Malformed row at line {line} of {path}: expected {width} fields, got {len(row)}.",
                        {"row": line},
                    )
    except csv.Error as err:
        raise ParseError(f"Malformed CSV {path}: {err}") from err


def _line_of(position: int) -> int:
    """File line number (1-based, header on line 1) of a data row position."""
    return position + 2


def _parse_binary(column: pd.Series, name: str) -> np.ndarray:
    parsed = pd.to_numeric(column.str.strip(), errors="coerce").to_numpy(dtype=np.float64)
    invalid = ~np.isin(parsed, (0.0, 1.0))
    if invalid.any():
        position = int(np.flatnonzero(invalid)[0])
        raise SchemaError(
            f"Target column {name} has non-binary value {column.iloc[position]!r} at line {_line_of(position)}.",
            {"row": _line_of(position)},
        )
    return parsed.astype(np.int8)


def _parse_ids(column: pd.Series, name: str) -> np.ndarray:
    parsed = pd.to_numeric(column.str.strip(), errors="coerce").to_numpy(dtype=np.float64)
    invalid = np.isnan(parsed) | (parsed != np.round(parsed))
    if invalid.any():
        position = int(np.flatnonzero(invalid)[0])
        raise SchemaError(
            f"Id column {name} has non-integer value {column.iloc[position]!r} at line {_line_of(position)}.",
            {"row": _line_of(position)},
        )
    return parsed.astype(np.int64)


def load_csv(path: PathLike, schema: Optional[SchemaConfig] = None) -> Dataset:
    """Load the main table into a Dataset.

    Numeric columns are parsed as floats; empty cells and sentinel values become NaN; categorical columns
    become label indices into the sorted set of labels seen in the file. Row order is preserved.

    Args:
        path (str): CSV file with a header row.
        schema (SchemaConfig): Column roles and missing-value conventions.

    Returns:
        Dataset: The loaded, not yet encoded, dataset.
    """
    schema = schema or SchemaConfig()
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"File {path} does not exist.")

    frame = _read_frame(path)
    header = [str(name) for name in frame.iloc[0].tolist()]
    duplicates = sorted({name for name in header if header.count(name) > 1})
    if duplicates:
        raise SchemaError(f"Duplicate header name(s): {', '.join(duplicates)}.")
    body = frame.iloc[1:].reset_index(drop=True)
    body.columns = header
    _check_field_counts(path, len(header))

    schema.validate(header)
    sentinels = schema.resolve_sentinels(header)
    explicit = set(schema.categorical_columns) if schema.categorical_columns is not None else None
    if explicit is not None:
        unknown = sorted(explicit - set(header))
        if unknown:
            raise SchemaError(f"Categorical column(s) {', '.join(unknown)} not found in header.")

    if schema.target_column in header:
        target = _parse_binary(body[schema.target_column], schema.target_column)
    else:
        target = np.zeros(len(body), dtype=np.int8)
    row_ids = _parse_ids(body[schema.id_column], schema.id_column)

    names, kinds, columns, categories = [], [], [], {}
    for name in header:
        if name in (schema.target_column, schema.id_column):
            continue
        text = body[name]
        blank = (text.str.strip() == "").to_numpy()
        numeric = pd.to_numeric(text.where(~blank), errors="coerce").to_numpy(dtype=np.float64)
        if name in sentinels:
            # Sentinel cells are missing before any typing decision.
            blank = blank | (numeric == sentinels[name])
            numeric = np.where(blank, np.nan, numeric)
        non_numeric = np.isnan(numeric) & ~blank
        if explicit is not None:
            categorical = name in explicit
            if not categorical and non_numeric.any():
                position = int(np.flatnonzero(non_numeric)[0])
                raise SchemaError(
                    f"Column {name} has non-numeric value {text.iloc[position]!r} at line {_line_of(position)}.",
                    {"row": _line_of(position)},
                )
        else:
            distinct = text[~blank].nunique()
            categorical = bool(non_numeric.any()) or distinct <= schema.cardinality_threshold
            if non_numeric.any() and distinct > schema.cardinality_threshold:
                logger.warning("Text column %s has %s distinct values; treating it as categorical", name, distinct)

        if categorical:
            labels = tuple(sorted(set(text[~blank].tolist())))
            lookup = {label: float(index) for index, label in enumerate(labels)}
            column = np.array([np.nan if is_blank else lookup[value] for value, is_blank in zip(text, blank)])
            categories[name] = labels
            kinds.append(COLUMN_CATEGORICAL)
        else:
            column = numeric
            kinds.append(COLUMN_NUMERIC)
        names.append(name)
        columns.append(column)

    values = np.column_stack(columns) if columns else np.empty((len(body), 0))
    dataset = Dataset(
        feature_names=tuple(names),
        column_kinds=tuple(kinds),
        values=values,
        target=target,
        row_ids=row_ids,
        categories=categories,
        target_name=schema.target_column,
        id_name=schema.id_column,
    )
    logger.info(
        "Loaded %s rows, %s feature columns (%s categorical) from %s",
        dataset.n_rows,
        dataset.n_features,
        len(categories),
        path,
    )
    return dataset


def write_csv(dataset: Dataset, path: PathLike) -> Path:
    """Write a Dataset in the ingestion dialect: id first, target last, missing cells empty."""
    text = dataset.to_frame().to_csv(index=False, lineterminator="\n", na_rep="")
    return atomic_write_text(path, text)


def load_table(path: PathLike) -> pd.DataFrame:
    """Read an auxiliary table as-is, with empty cells as NaN and pandas type inference."""
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"File {path} does not exist.")
    try:
        return pd.read_csv(path, keep_default_na=False, na_values=[""], encoding="utf-8-sig")
    except pd.errors.ParserError as err:
        raise ParseError(f"Malformed auxiliary table {path}: {err}") from err


# ------------------------------------------------------------------------------
# ENCODING
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class EncodedColumn:
    """Fitted encoding of one categorical column."""

    name: str
    method: str
    labels: Tuple[str, ...]
    frequencies: Tuple[float, ...] = ()

    @property
    def output_names(self) -> Tuple[str, ...]:
        """Names of the columns this encoding emits."""
        if self.method == ENCODING_ONE_HOT:
            return tuple(f"{self.name}_{label}" for label in self.labels)
        return (self.name,)


@dataclass(frozen=True)
class CategoricalEncoding:
    """Encoding parameters fitted on training rows, replayed verbatim on held-out data."""

    mode: str
    max_onehot_cardinality: int
    source_names: Tuple[str, ...]
    columns: Tuple[EncodedColumn, ...]

    def to_dict(self) -> dict:
        """JSON-ready form."""
        return {
            "mode": self.mode,
            "max_onehot_cardinality": self.max_onehot_cardinality,
            "source_names": list(self.source_names),
            "columns": [
                {
                    "name": col.name,
                    "method": col.method,
                    "labels": list(col.labels),
                    "frequencies": list(col.frequencies),
                }
                for col in self.columns
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CategoricalEncoding":
        """Inverse of :meth:`to_dict`."""
        return cls(
            mode=payload["mode"],
            max_onehot_cardinality=int(payload["max_onehot_cardinality"]),
            source_names=tuple(payload["source_names"]),
            columns=tuple(
                EncodedColumn(
                    name=col["name"],
                    method=col["method"],
                    labels=tuple(col["labels"]),
                    frequencies=tuple(float(freq) for freq in col["frequencies"]),
                )
                for col in payload["columns"]
            ),
        )


def fit_encoding(
    dataset: Dataset, mode: str = ENCODING_ONE_HOT, max_onehot_cardinality: int = DEFAULT_MAX_ONEHOT_CARDINALITY
) -> CategoricalEncoding:
    """Fit a categorical encoding on ``dataset``.

    In one-hot mode, columns with more than ``max_onehot_cardinality`` labels fall back to frequency encoding.
    """
    if mode not in (ENCODING_ONE_HOT, ENCODING_FREQUENCY):
        raise ConfigError(f"Unknown encoding mode {mode}.")
    if max_onehot_cardinality < 1:
        raise ConfigError("max_onehot_cardinality must be at least 1.")
    encoded = []
    for name in dataset.categorical_columns:
        codes = dataset.column(name)
        present = codes[~np.isnan(codes)].astype(np.int64)
        all_labels = dataset.categories.get(name, ())
        counts = np.bincount(present, minlength=len(all_labels))
        labels = tuple(label for label, count in zip(all_labels, counts) if count > 0)
        method = mode
        if mode == ENCODING_ONE_HOT and len(labels) > max_onehot_cardinality:
            logger.info("Column %s has %s categories; using frequency encoding", name, len(labels))
            method = ENCODING_FREQUENCY
        frequencies = ()
        if method == ENCODING_FREQUENCY:
            total = max(len(present), 1)
            frequencies = tuple(float(count) / total for count in counts if count > 0)
        encoded.append(EncodedColumn(name=name, method=method, labels=labels, frequencies=frequencies))
    return CategoricalEncoding(
        mode=mode,
        max_onehot_cardinality=max_onehot_cardinality,
        source_names=dataset.feature_names,
        columns=tuple(encoded),
    )


def apply_encoding(dataset: Dataset, encoding: CategoricalEncoding) -> Dataset:
    """Replay a fitted encoding. Unseen categories map to all-zero one-hot groups / frequency 0.0."""
    if dataset.feature_names != encoding.source_names:
        raise SchemaError("Encoding was fitted on different columns than the dataset being encoded.")
    by_name = {col.name: col for col in encoding.columns}
    names, blocks = [], []
    for position, name in enumerate(dataset.feature_names):
        column = dataset.values[:, position]
        if name not in by_name:
            names.append(name)
            blocks.append(column[:, None])
            continue
        spec = by_name[name]
        index_of = {label: index for index, label in enumerate(spec.labels)}
        # map this dataset's label indices onto the fitted label order; -1 marks unseen
        remap = np.array([index_of.get(label, -1) for label in dataset.categories.get(name, ())] + [-1])
        present = ~np.isnan(column)
        mapped = np.full(len(column), -1, dtype=np.int64)
        mapped[present] = remap[column[present].astype(np.int64)]
        if spec.method == ENCODING_ONE_HOT:
            block = (mapped[:, None] == np.arange(len(spec.labels))[None, :]).astype(np.float64)
        else:
            freqs = np.append(np.asarray(spec.frequencies, dtype=np.float64), 0.0)
            block = freqs[mapped][:, None]
            block[~present] = np.nan
        names.extend(spec.output_names)
        blocks.append(block)
    values = np.hstack(blocks) if blocks else np.empty((dataset.n_rows, 0))
    if len(set(names)) != len(names):
        raise SchemaError("Encoded column names collide with existing columns.")
    return dataset.with_values(values, names)


def encode_categoricals(
    dataset: Dataset, mode: str = ENCODING_ONE_HOT, max_onehot_cardinality: int = DEFAULT_MAX_ONEHOT_CARDINALITY
) -> Tuple[Dataset, CategoricalEncoding]:
    """Fit an encoding on ``dataset`` and apply it; returns the encoded dataset and the fitted parameters."""
    encoding = fit_encoding(dataset, mode, max_onehot_cardinality)
    return apply_encoding(dataset, encoding), encoding


# ------------------------------------------------------------------------------
# AUXILIARY TABLES
# ------------------------------------------------------------------------------
def aggregate_join(
    main: Dataset,
    aux: pd.DataFrame,
    key: str,
    aggregations: Sequence[Tuple[str, str]],
    aux_name: str = "aux",
) -> Dataset:
    """Aggregate an auxiliary table per key and append the results to ``main``.

    Args:
        main (Dataset): Main table; ``key`` is its id column or one of its feature columns.
        aux (DataFrame): Raw auxiliary table.
        key (str): Join column present in both tables.
        aggregations (list): ``(column, aggregation)`` pairs, aggregation one of count/mean/min/max/sum.
        aux_name (str): Prefix of the new columns, ``<aux_name>_<column>_<aggregation>``.

    Returns:
        Dataset: ``main`` with one new numeric column per aggregation, same row order.
    """
    if key not in aux.columns:
        raise SchemaError(f"Join key {key} not found in auxiliary table {aux_name}.")
    if key == main.id_name:
        main_keys = main.row_ids.astype(np.float64)
    elif key in main.feature_names:
        main_keys = main.column(key)
    else:
        raise SchemaError(f"Join key {key} not found in main table.")
    aux_keys = pd.to_numeric(aux[key], errors="coerce").astype(np.float64)

    names, blocks = list(main.feature_names), [main.values]
    for column, aggregation in aggregations:
        if aggregation not in AGGREGATIONS:
            raise ConfigError(f"Unknown aggregation {aggregation}; expected one of {', '.join(AGGREGATIONS)}.")
        if column not in aux.columns:
            raise SchemaError(f"Aggregation column {column} not found in auxiliary table {aux_name}.")
        numeric = pd.to_numeric(aux[column], errors="coerce")
        if (numeric.isna() & aux[column].notna()).any():
            raise SchemaError(f"Aggregation column {column} of {aux_name} is not numeric.")
        grouped = pd.DataFrame({"key": aux_keys, "value": numeric}).groupby("key")["value"].agg(aggregation)
        joined = grouped.reindex(main_keys).to_numpy(dtype=np.float64)
        if aggregation == "count":
            joined = np.nan_to_num(joined, nan=0.0)
        names.append(f"{aux_name}_{column}_{aggregation}")
        blocks.append(joined[:, None])
        logger.debug("Joined %s %s of %s on %s", aggregation, column, aux_name, key)
    if len(set(names)) != len(names):
        raise SchemaError(f"Aggregated column names from {aux_name} collide with existing columns.")
    kinds = main.column_kinds + (COLUMN_NUMERIC,) * (len(names) - main.n_features)
    return main.with_values(np.hstack(blocks), names, kinds)


# ------------------------------------------------------------------------------
# SPLITS
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SplitPlan:
    """Fold assignment of every row for k-fold cross validation."""

    folds: np.ndarray
    k: int
    seed: int
    stratified: bool = True

    def __post_init__(self):
        """Freeze the assignment and check fold indices are in range."""
        folds = np.array(self.folds, dtype=np.int64)
        if len(folds) and (folds.min() < 0 or folds.max() >= self.k):
            raise SplitError(f"Fold indices must lie in [0, {self.k}).")
        folds.setflags(write=False)
        object.__setattr__(self, "folds", folds)

    def fold_indices(self, fold: int) -> Tuple[np.ndarray, np.ndarray]:
        """Return (training row indices, held-out row indices) for one fold."""
        held_out = self.folds == fold
        return np.flatnonzero(~held_out), np.flatnonzero(held_out)

    def describe(self) -> str:
        """Short descriptor recorded in reports."""
        return f"{'stratified ' if self.stratified else ''}{self.k}-fold seed={self.seed}"


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def split(
    dataset: Dataset, test_fraction: float, seed: int, stratified: bool = True
) -> Tuple[Dataset, Dataset]:
    """Partition rows into (train, test); deterministic for a fixed seed.

    Stratified mode draws ``round(test_fraction * n_class)`` test rows from each class.
    """
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must lie in (0, 1); got {test_fraction}.")
    in_test = np.zeros(dataset.n_rows, dtype=bool)
    if stratified:
        for label in (0, 1):
            members = np.flatnonzero(dataset.target == label)
            shuffled = stream(seed, "split", label).permutation(members)
            in_test[shuffled[: _round_half_up(test_fraction * len(members))]] = True
    else:
        shuffled = stream(seed, "split").permutation(dataset.n_rows)
        in_test[shuffled[: _round_half_up(test_fraction * dataset.n_rows)]] = True

    train, test = dataset.take(np.flatnonzero(~in_test)), dataset.take(np.flatnonzero(in_test))
    for part_name, part in (("train", train), ("test", test)):
        negatives, positives = part.class_counts()
        if negatives == 0 or positives == 0:
            raise SplitError(f"Split leaves a class empty in the {part_name} part ({negatives} / {positives}).")
    logger.info("Split %s rows into %s train / %s test (seed %s)", dataset.n_rows, train.n_rows, test.n_rows, seed)
    return train, test


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> SplitPlan:
    """Assign every row to one of ``k`` folds with per-fold class counts balanced within one row."""
    if k < 2:
        raise SplitError(f"k must be at least 2; got {k}.")
    folds = np.empty(dataset.n_rows, dtype=np.int64)
    offset = 0
    for label in (0, 1):
        members = np.flatnonzero(dataset.target == label)
        if len(members) < k:
            raise SplitError(f"Class {label} has {len(members)} rows, fewer than k={k}.")
        shuffled = stream(seed, "kfold", label).permutation(members)
        # continuing the round robin across classes keeps total fold sizes within one row as well
        folds[shuffled] = (offset + np.arange(len(shuffled))) % k
        offset += len(shuffled)
    return SplitPlan(folds=folds, k=k, seed=seed, stratified=True)


def describe_holdout(test_fraction: float, seed: int, stratified: bool) -> str:
    """Short descriptor of a train/test split recorded in reports."""
    return f"{'stratified ' if stratified else ''}holdout test_fraction={test_fraction} seed={seed}"
