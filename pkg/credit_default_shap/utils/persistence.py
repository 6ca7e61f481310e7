"""Save and load ModelArtifact JSON files."""
import json
import logging
from dataclasses import asdict
from pathlib import Path

from credit_default_shap.constant import ARTIFACT_SCHEMA_VERSION
from credit_default_shap.utils.dataset import SchemaConfig
from credit_default_shap.utils.errors import CreditModelError, DataIOError, PersistenceError
from credit_default_shap.utils.io import PathLike, atomic_write_text, dumps_json
from credit_default_shap.utils.models import MODEL_CLASSES, ModelArtifact
from credit_default_shap.utils.preprocess import Provenance

logger = logging.getLogger(__name__)


def _schema_to_dict(schema: SchemaConfig) -> dict:
    payload = asdict(schema)
    if schema.categorical_columns is not None:
        payload["categorical_columns"] = list(schema.categorical_columns)
    if schema.sentinel_missing is not None:
        payload["sentinel_missing"] = dict(schema.sentinel_missing)
    return payload


def _schema_from_dict(payload: dict) -> SchemaConfig:
    categorical = payload.get("categorical_columns")
    return SchemaConfig(
        target_column=payload["target_column"],
        id_column=payload["id_column"],
        categorical_columns=tuple(categorical) if categorical is not None else None,
        cardinality_threshold=int(payload["cardinality_threshold"]),
        sentinel_missing=payload.get("sentinel_missing"),
        require_target=bool(payload.get("require_target", True)),
    )


def artifact_to_dict(artifact: ModelArtifact) -> dict:
    """JSON-ready artifact with a stable key layout."""
    return {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "kind": artifact.kind,
        "feature_names": list(artifact.feature_names),
        "hyperparameters": dict(artifact.hyperparameters),
        "seed": artifact.seed,
        "preprocessing": artifact.preprocessing.to_dict() if artifact.preprocessing is not None else None,
        "schema": _schema_to_dict(artifact.schema) if artifact.schema is not None else None,
        "payload": artifact.model.to_dict(),
    }


def artifact_from_dict(payload: dict) -> ModelArtifact:
    """Rebuild an artifact, mapping every structural problem to a persistence error."""
    if not isinstance(payload, dict):
        raise PersistenceError("Artifact must be a JSON object.", reason="corrupted")
    version = payload.get("schema_version")
    if version != ARTIFACT_SCHEMA_VERSION:
        raise PersistenceError(
            f"Artifact schema version {version} is not supported (expected {ARTIFACT_SCHEMA_VERSION}).",
            reason="version-mismatch",
        )
    kind = payload.get("kind")
    if kind not in MODEL_CLASSES:
        raise PersistenceError(f"Unknown model kind {kind!r} in artifact.", reason="unknown-kind")
    try:
        return ModelArtifact(
            kind=kind,
            feature_names=tuple(payload["feature_names"]),
            hyperparameters=dict(payload["hyperparameters"]),
            seed=int(payload["seed"]),
            model=MODEL_CLASSES[kind].from_dict(payload["payload"]),
            preprocessing=Provenance.from_dict(payload["preprocessing"]) if payload.get("preprocessing") else None,
            schema=_schema_from_dict(payload["schema"]) if payload.get("schema") else None,
        )
    except (KeyError, TypeError, ValueError, IndexError, CreditModelError) as err:
        raise PersistenceError(f"Artifact payload is corrupted: {err}", reason="corrupted") from err


def dumps_model(artifact: ModelArtifact) -> str:
    """Canonical JSON text of an artifact."""
    return dumps_json(artifact_to_dict(artifact))


def save_model(artifact: ModelArtifact, path: PathLike) -> Path:
    """Atomically write an artifact; the same artifact always produces the same bytes."""
    path = atomic_write_text(path, dumps_model(artifact))
    logger.info("Saved %s artifact to %s", artifact.kind, path)
    return path


def load_model(path: PathLike) -> ModelArtifact:
    """Read an artifact written by :func:`save_model`."""
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"Artifact {path} does not exist.")
    try:
        with open(path, mode="r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise PersistenceError(f"Artifact {path} is not valid JSON: {err}", reason="corrupted") from err
    artifact = artifact_from_dict(payload)
    logger.info("Loaded %s artifact from %s", artifact.kind, path)
    return artifact
