"""Run configuration loaded from JSON.

Relative paths in a config file are resolved against the directory holding that file. Seeds not given
explicitly inherit the run seed.
"""
import hashlib
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from credit_default_shap.constant import (
    DEFAULT_CARDINALITY_THRESHOLD,
    DEFAULT_DEPTHS,
    DEFAULT_ID_COLUMN,
    DEFAULT_SEED,
    DEFAULT_TARGET_COLUMN,
    DEFAULT_THRESHOLD,
    EXTERNAL_METHODS,
)
from credit_default_shap.utils.dataset import SchemaConfig
from credit_default_shap.utils.errors import ConfigError
from credit_default_shap.utils.evaluation import PipelineSpec, SplitSpec, default_specs
from credit_default_shap.utils.io import PathLike, dumps_json, read_json
from credit_default_shap.utils.preprocess import PreprocessConfig, SelectionConfig, SmoteConfig

logger = logging.getLogger(__name__)

# Short schema keys and the SchemaConfig fields they set.
SCHEMA_KEY_ALIASES = {
    "target": "target_column",
    "id": "id_column",
    "categoricals": "categorical_columns",
    "sentinels": "sentinel_missing",
}

__all__ = [
    "AuxTableConfig",
    "DataConfig",
    "ModelSpec",
    "PreprocessConfig",
    "RunConfig",
    "SchemaConfig",
    "SelectionConfig",
    "SmoteConfig",
    "SplitSpec",
    "load_config",
]


def _check_keys(payload: Any, allowed: Iterable[str], required: Iterable[str], where: str) -> dict:
    if not isinstance(payload, dict):
        raise ConfigError(f"{where} must be a JSON object.")
    allowed = set(allowed)
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise ConfigError(f"Unknown config key {where}.{unknown[0]}.")
    missing = sorted(set(required) - set(payload))
    if missing:
        raise ConfigError(f"Missing required config key {where}.{missing[0]}.")
    return payload


def _field_names(cls) -> List[str]:
    return [item.name for item in fields(cls)]


@dataclass(frozen=True)
class AuxTableConfig:
    """An auxiliary table aggregated per key and joined onto the main table."""

    name: str
    path: Path
    key: str = DEFAULT_ID_COLUMN
    aggregations: Tuple[Tuple[str, str], ...] = ()


@dataclass(frozen=True)
class DataConfig:
    """Input files."""

    main: Path
    aux_tables: Tuple[AuxTableConfig, ...] = ()


@dataclass(frozen=True)
class ModelSpec:
    """One model kind with hyperparameter overrides and an optional display name."""

    kind: str
    hyperparameters: Dict[str, Any] = field(default_factory=dict)
    name: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:  # pylint: disable=too-many-instance-attributes
    """Everything a subcommand needs besides its command-line flags."""

    data: DataConfig
    output_dir: Path
    seed: int = DEFAULT_SEED
    schema: SchemaConfig = field(default_factory=SchemaConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    models: Optional[Tuple[ModelSpec, ...]] = None
    split: SplitSpec = field(default_factory=SplitSpec)
    depths: Tuple[int, ...] = DEFAULT_DEPTHS
    threshold: float = DEFAULT_THRESHOLD
    include_external: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        """Validate ranges that no nested record checks."""
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in [0, 1]; got {self.threshold}.")
        if self.n_jobs < 1:
            raise ConfigError(f"n_jobs must be at least 1; got {self.n_jobs}.")
        if any(depth < 1 for depth in self.depths):
            raise ConfigError("depths must be positive integers.")

    def pipeline_specs(self, default_kinds: Optional[Sequence[str]] = None) -> List[PipelineSpec]:
        """Model specs combined with the run's preprocessing; external placeholders appended on request."""
        if self.models is not None:
            specs = [
                PipelineSpec(
                    kind=spec.kind,
                    hyperparameters=dict(spec.hyperparameters),
                    preprocess=self.preprocess,
                    name=spec.name,
                )
                for spec in self.models
            ]
        elif default_kinds is not None:
            specs = [PipelineSpec(kind=kind, preprocess=self.preprocess) for kind in default_kinds]
        else:
            specs = default_specs(self.preprocess)
        if self.include_external:
            present = {spec.kind for spec in specs}
            specs += [
                PipelineSpec(kind=kind, preprocess=self.preprocess) for kind in EXTERNAL_METHODS if kind not in present
            ]
        return specs

    def with_overrides(  # pylint: disable=too-many-arguments
        self,
        seed: Optional[int] = None,
        output_dir: Optional[PathLike] = None,
        test_fraction: Optional[float] = None,
        folds: Optional[int] = None,
        depths: Optional[Sequence[int]] = None,
        models: Optional[Sequence[str]] = None,
    ) -> "RunConfig":
        """Apply command-line flags; ``seed`` replaces every seed of the run."""
        config = self
        if seed is not None:
            smote = replace(config.preprocess.smote, seed=seed) if config.preprocess.smote else None
            config = replace(
                config,
                seed=seed,
                split=replace(config.split, seed=seed),
                preprocess=replace(config.preprocess, smote=smote),
            )
        if output_dir is not None:
            config = replace(config, output_dir=Path(output_dir))
        if test_fraction is not None and folds is not None:
            raise ConfigError("Give at most one of --test-fraction and --folds.")
        if test_fraction is not None:
            config = replace(config, split=replace(config.split, test_fraction=test_fraction, folds=None))
        if folds is not None:
            config = replace(config, split=replace(config.split, test_fraction=None, folds=folds))
        if depths is not None:
            config = replace(config, depths=tuple(int(depth) for depth in depths))
        if models is not None:
            config = replace(config, models=tuple(ModelSpec(kind=kind) for kind in models))
        return config

    def to_dict(self) -> dict:
        """JSON-ready echo of the configuration, recorded in run manifests."""
        smote = self.preprocess.smote
        return {
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "data": {
                "main": str(self.data.main),
                "aux_tables": [
                    {
                        "name": table.name,
                        "path": str(table.path),
                        "key": table.key,
                        "aggregations": [list(pair) for pair in table.aggregations],
                    }
                    for table in self.data.aux_tables
                ],
            },
            "schema": {
                "target_column": self.schema.target_column,
                "id_column": self.schema.id_column,
                "categorical_columns": (
                    list(self.schema.categorical_columns) if self.schema.categorical_columns is not None else None
                ),
                "cardinality_threshold": self.schema.cardinality_threshold,
                "sentinel_missing": dict(self.schema.sentinel_missing) if self.schema.sentinel_missing else None,
            },
            "preprocess": {
                "encoding": self.preprocess.encoding,
                "max_onehot_cardinality": self.preprocess.max_onehot_cardinality,
                "missing_indicators": self.preprocess.missing_indicators,
                "scale": self.preprocess.scale,
                "smote": (
                    {"k_neighbors": smote.k_neighbors, "target_ratio": smote.target_ratio, "seed": smote.seed}
                    if smote
                    else None
                ),
                "selection": {
                    "method": self.preprocess.selection.method,
                    "threshold": self.preprocess.selection.threshold,
                    "top_m": self.preprocess.selection.top_m,
                    "n_bins": self.preprocess.selection.n_bins,
                },
            },
            "models": (
                [{"kind": m.kind, "hyperparameters": dict(m.hyperparameters), "name": m.name} for m in self.models]
                if self.models is not None
                else None
            ),
            "split": {
                "test_fraction": self.split.test_fraction,
                "folds": self.split.folds,
                "seed": self.split.seed,
                "stratified": self.split.stratified,
            },
            "depths": list(self.depths),
            "threshold": self.threshold,
            "include_external": self.include_external,
            "n_jobs": self.n_jobs,
        }


def spec_hash(payload: Any) -> str:
    """SHA-256 of the canonical JSON form of ``payload``."""
    return hashlib.sha256(dumps_json(payload).encode("utf-8")).hexdigest()


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def _parse_schema(payload: dict) -> SchemaConfig:
    _check_keys(payload, [*SCHEMA_KEY_ALIASES, *_field_names(SchemaConfig)], (), "schema")
    payload = dict(payload)
    for short, full in SCHEMA_KEY_ALIASES.items():
        if short in payload:
            if full in payload:
                raise ConfigError(f"Give only one of schema.{short} and schema.{full}.")
            payload[full] = payload.pop(short)
    categorical = payload.get("categorical_columns")
    if isinstance(categorical, int) and not isinstance(categorical, bool):
        # A number in place of the list is the cardinality threshold.
        if "cardinality_threshold" in payload:
            raise ConfigError("Give the cardinality threshold once.")
        payload["cardinality_threshold"], categorical = categorical, None
    sentinels = payload.get("sentinel_missing")
    return SchemaConfig(
        target_column=payload.get("target_column", DEFAULT_TARGET_COLUMN),
        id_column=payload.get("id_column", DEFAULT_ID_COLUMN),
        categorical_columns=tuple(categorical) if categorical is not None else None,
        cardinality_threshold=int(payload.get("cardinality_threshold", DEFAULT_CARDINALITY_THRESHOLD)),
        sentinel_missing={key: float(value) for key, value in sentinels.items()} if sentinels is not None else None,
        require_target=bool(payload.get("require_target", True)),
    )


def _parse_preprocess(payload: dict, seed: int) -> PreprocessConfig:
    _check_keys(payload, _field_names(PreprocessConfig), (), "preprocess")
    smote = None
    if payload.get("smote") is not None:
        smote_payload = _check_keys(payload["smote"], _field_names(SmoteConfig), (), "preprocess.smote")
        smote = SmoteConfig(**{"seed": seed, **smote_payload})
    selection = SelectionConfig(
        **_check_keys(payload.get("selection", {}), _field_names(SelectionConfig), (), "preprocess.selection")
    )
    options = {key: value for key, value in payload.items() if key not in ("smote", "selection")}
    return PreprocessConfig(smote=smote, selection=selection, **options)


def _parse_data(payload: dict, base: Path) -> DataConfig:
    _check_keys(payload, ("main", "aux_tables"), ("main",), "data")
    tables = []
    for index, table in enumerate(payload.get("aux_tables", [])):
        where = f"data.aux_tables[{index}]"
        _check_keys(table, _field_names(AuxTableConfig), ("name", "path"), where)
        pairs = []
        for pair in table.get("aggregations", []):
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ConfigError(f"{where}.aggregations entries must be [column, aggregation] pairs.")
            pairs.append((str(pair[0]), str(pair[1])))
        tables.append(
            AuxTableConfig(
                name=table["name"],
                path=_resolve(base, table["path"]),
                key=table.get("key", DEFAULT_ID_COLUMN),
                aggregations=tuple(pairs),
            )
        )
    return DataConfig(main=_resolve(base, payload["main"]), aux_tables=tuple(tables))


def _parse_models(payload: Any) -> Tuple[ModelSpec, ...]:
    if not isinstance(payload, list):
        raise ConfigError("models must be a list.")
    specs = []
    for index, entry in enumerate(payload):
        if isinstance(entry, str):
            entry = {"kind": entry}
        _check_keys(entry, _field_names(ModelSpec), ("kind",), f"models[{index}]")
        hyperparameters = entry.get("hyperparameters") or {}
        if not isinstance(hyperparameters, dict):
            raise ConfigError(f"models[{index}].hyperparameters must be a JSON object.")
        specs.append(ModelSpec(kind=entry["kind"], hyperparameters=dict(hyperparameters), name=entry.get("name")))
    return tuple(specs)


def _build_config(payload: dict, base: Path) -> RunConfig:
    seed = int(payload.get("seed", DEFAULT_SEED))
    split_payload = _check_keys(payload.get("split", {}), _field_names(SplitSpec), (), "split")
    if "folds" in split_payload and "test_fraction" not in split_payload:
        split_payload = {**split_payload, "test_fraction": None}
    return RunConfig(
        data=_parse_data(payload["data"], base),
        output_dir=_resolve(base, payload["output_dir"]),
        seed=seed,
        schema=_parse_schema(payload.get("schema", {})),
        preprocess=_parse_preprocess(payload.get("preprocess", {}), seed),
        models=_parse_models(payload["models"]) if payload.get("models") is not None else None,
        split=SplitSpec(**{"seed": seed, **split_payload}),
        depths=tuple(int(depth) for depth in payload.get("depths", DEFAULT_DEPTHS)),
        threshold=float(payload.get("threshold", DEFAULT_THRESHOLD)),
        include_external=bool(payload.get("include_external", False)),
        n_jobs=int(payload.get("n_jobs", 1)),
    )


def parse_config(payload: dict, base_dir: PathLike = ".") -> RunConfig:
    """Build a RunConfig from a decoded JSON object.

    Args:
        payload (dict): Decoded config file.
        base_dir (str): Directory against which relative paths are resolved.

    Returns:
        RunConfig: Validated configuration.
    """
    base = Path(base_dir)
    _check_keys(payload, _field_names(RunConfig), ("data", "output_dir"), "config")
    try:
        config = _build_config(payload, base)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"Invalid config value: {err}") from err
    logger.debug("Parsed run config with seed %s and split %s", config.seed, config.split.describe())
    return config


def load_config(path: PathLike) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    try:
        payload = read_json(path)
    except ValueError as err:
        raise ConfigError(f"Config {path} is not valid JSON: {err}") from err
    return parse_config(payload, path.parent)
