"""Handlers of the credit-default-shap subcommands."""
import logging
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from credit_default_shap import __version__
from credit_default_shap.constant import (
    ARTIFACT_FILE,
    BEST_ARTIFACT_FILE,
    DEFAULT_SEED,
    IMPORTANCE_FILE,
    INGEST_DATA_FILE,
    INGEST_SUMMARY_FILE,
    MANIFEST_FILE,
    METRICS_FILE,
    PREDICTIONS_FILE,
    SHAP_SUMMARY_FILE,
    TABLE1_STEM,
    TABLE2_STEM,
    CommandStatus,
)
from credit_default_shap.utils.config import RunConfig, spec_hash
from credit_default_shap.utils.dataset import (
    Dataset,
    SchemaConfig,
    aggregate_join,
    encode_categoricals,
    load_csv,
    load_table,
    split,
    write_csv,
)
from credit_default_shap.utils.dispatcher import Dispatcher, handle_subcommands, subcommand_of
from credit_default_shap.utils.errors import ConfigError, CreditModelError, ExplainError
from credit_default_shap.utils.evaluation import (
    PipelineSpec,
    best_record,
    compare_algorithms,
    depth_sweep,
    evaluate,
    run_spec,
)
from credit_default_shap.utils.explain import (
    dependency_data,
    explain_rows,
    model_importance,
    shap_summary,
)
from credit_default_shap.utils.models import ModelArtifact, fit_artifact, predict_proba
from credit_default_shap.utils.persistence import load_model, save_model
from credit_default_shap.utils.plotting import dependency_svg, summary_svg
from credit_default_shap.utils.report import (
    dependency_frame,
    format_metric,
    importance_frame,
    predictions_frame,
    records_frame,
    shap_summary_frame,
    sweep_frame,
    table1_markdown,
    table2_markdown,
)
from credit_default_shap.utils.sample import SampleConfig, generate_sample as write_sample

COMMAND = "credit-default-shap"
F1_NOTE = "F1 is reported alongside ACC/Precision/Recall in the depth sweep; it is the selection criterion."

logger = logging.getLogger(__name__)


def notify_user_of_error(dispatcher: Dispatcher, err: Exception) -> int:
    """Log an error, emit the one-line JSON error, and return the exit code."""
    if isinstance(err, CreditModelError):
        error_class, message, code = err.error_class, str(err), err.exit_code
    else:
        error_class, message, code = "internal", f"{type(err).__name__}: {err}", int(CommandStatus.FAILED)
    logger.error("%s error: %s", error_class, message)
    dispatcher.send_error(error_class, message)
    return code


def credit_default_shap(subcommand: str, dispatcher: Optional[Dispatcher] = None, **kwargs) -> int:
    """Run one subcommand and translate every failure into an exit code."""
    dispatcher = dispatcher or Dispatcher()
    try:
        return int(handle_subcommands(COMMAND, subcommand, dispatcher, **kwargs))
    except CreditModelError as err:
        return notify_user_of_error(dispatcher, err)
    except Exception as err:  # pylint: disable=broad-except
        logger.exception("Unexpected failure in %s", subcommand)
        return notify_user_of_error(dispatcher, err)


# ------------------------------------------------------------------------------
# SHARED HELPERS
# ------------------------------------------------------------------------------
def load_run_dataset(config: RunConfig, main: Optional[Path] = None, schema: Optional[SchemaConfig] = None) -> Dataset:
    """Load the main table and join every configured auxiliary table."""
    dataset = load_csv(main or config.data.main, schema or config.schema)
    for table in config.data.aux_tables:
        dataset = aggregate_join(dataset, load_table(table.path), table.key, table.aggregations, table.name)
        logger.info("Joined %s aggregations from %s", len(table.aggregations), table.name)
    return dataset


def prediction_schema(artifact: ModelArtifact) -> SchemaConfig:
    """Schema for unlabeled rows: the training schema with the categorical columns pinned and the target optional."""
    schema = artifact.schema or SchemaConfig()
    categorical = schema.categorical_columns
    if artifact.preprocessing is not None:
        raw_names = set(artifact.preprocessing.input_feature_names)
        categorical = tuple(col.name for col in artifact.preprocessing.encoding.columns if col.name in raw_names)
    return replace(schema, categorical_columns=categorical, require_target=False)


def load_artifact_rows(artifact: ModelArtifact, data: Path, config: Optional[RunConfig] = None) -> Dataset:
    """Read rows to score or explain, repeating the training joins when a run config is given."""
    schema = prediction_schema(artifact)
    if config is not None:
        return load_run_dataset(config, Path(data), schema)
    return load_csv(data, schema)


def _spec_payload(spec: PipelineSpec, config: RunConfig) -> dict:
    return {
        "kind": spec.kind,
        "name": spec.display_name,
        "hyperparameters": spec.hyperparameters,
        "preprocess": config.to_dict()["preprocess"],
        "split": config.to_dict()["split"],
    }


def write_manifest(
    dispatcher: Dispatcher,
    directory: Path,
    command: str,
    config: Optional[RunConfig] = None,
    specs: Sequence[PipelineSpec] = (),
    notes: Sequence[str] = (),
) -> Path:
    """Record what ran; ``timestamp`` is the only field that changes between identical runs."""
    payload = {
        "command": command,
        "package_version": __version__,
        "config": config.to_dict() if config is not None else None,
        "config_hash": spec_hash(config.to_dict()) if config is not None else None,
        "spec_hashes": {spec.display_name: spec_hash(_spec_payload(spec, config)) for spec in specs},
        "outputs": sorted({_relative(path, directory) for path in dispatcher.outputs}),
        "notes": list(notes),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return dispatcher.send_json(directory / MANIFEST_FILE, payload)


def _relative(path: Path, directory: Path) -> str:
    try:
        return str(Path(path).resolve().relative_to(directory.resolve()))
    except ValueError:
        return str(path)


def _single_spec(config: RunConfig, default_kind: str) -> PipelineSpec:
    specs = [spec for spec in config.pipeline_specs(default_kinds=(default_kind,)) if not spec.is_external]
    if len(specs) != 1:
        raise ConfigError(f"Expected exactly one implemented model spec; got {len(specs)}. Use compare for several.")
    return specs[0]


def refit(dataset: Dataset, spec: PipelineSpec, config: RunConfig) -> ModelArtifact:
    """Fit the artifact that accompanies an evaluation: all rows for k-fold runs, the training part otherwise."""
    rows = dataset
    if config.split.folds is None:
        rows, _ = split(dataset, config.split.test_fraction, config.split.seed, config.split.stratified)
    return fit_artifact(rows, spec.kind, _with_jobs(spec, config), spec.preprocess, config.seed, config.schema)


def _with_jobs(spec: PipelineSpec, config: RunConfig) -> dict:
    if spec.kind == "forest" and config.n_jobs > 1:
        return {**spec.hyperparameters, "n_jobs": config.n_jobs}
    return dict(spec.hyperparameters)


# ------------------------------------------------------------------------------
# SUBCOMMANDS
# ------------------------------------------------------------------------------
@subcommand_of(COMMAND)
def generate_sample(dispatcher, out, rows=1000, seed=DEFAULT_SEED, bureau=False):
    """Write a synthetic Home-Credit-shaped corpus."""
    main_path, bureau_path = write_sample(out, SampleConfig(n_rows=rows, seed=seed, bureau=bureau))
    dispatcher.record(main_path)
    message = f"Wrote {rows} synthetic applications to `{main_path}`"
    if bureau_path is not None:
        dispatcher.record(bureau_path)
        message += f" and bureau records to `{bureau_path}`"
    dispatcher.send_markdown(message + ".")
    return CommandStatus.SUCCEEDED


@subcommand_of(COMMAND)
def ingest(dispatcher, config: RunConfig):
    """Load, join and encode the configured data and write the model-ready table plus a summary."""
    dataset = load_run_dataset(config)
    encoded, encoding = encode_categoricals(
        dataset, config.preprocess.encoding, config.preprocess.max_onehot_cardinality
    )
    directory = Path(config.output_dir)
    dispatcher.record(write_csv(encoded, directory / INGEST_DATA_FILE))
    negatives, positives = encoded.class_counts()
    missing = np.isnan(encoded.values).sum(axis=0)
    summary = {
        "rows": encoded.n_rows,
        "source_columns": {name: kind for name, kind in zip(dataset.feature_names, dataset.column_kinds)},
        "encoding": encoding.to_dict(),
        "features": list(encoded.feature_names),
        "missing_counts": {name: int(count) for name, count in zip(encoded.feature_names, missing)},
        "class_balance": {"negative": int(negatives), "positive": int(positives)},
        "reload_hint": "Load the written table with an explicit empty categorical_columns list.",
    }
    dispatcher.send_json(directory / INGEST_SUMMARY_FILE, summary)
    write_manifest(dispatcher, directory, "ingest", config)
    dispatcher.send_markdown(
        f"Ingested {encoded.n_rows} rows into {encoded.n_features} model-ready columns "
        f"({positives} positive, {negatives} negative)."
    )
    return CommandStatus.SUCCEEDED


@subcommand_of(COMMAND)
def train(dispatcher, config: RunConfig):
    """Fit one pipeline, evaluate it, and save the artifact with its metrics."""
    spec = _single_spec(config, "gbdt")
    dataset = load_run_dataset(config)
    directory = Path(config.output_dir)
    if config.split.folds is not None:
        record = run_spec(dataset, spec, config.split, config.threshold)
        artifact = refit(dataset, spec, config)
    else:
        train_rows, test_rows = split(dataset, config.split.test_fraction, config.split.seed, config.split.stratified)
        artifact = fit_artifact(
            train_rows, spec.kind, _with_jobs(spec, config), spec.preprocess, config.seed, config.schema
        )
        record = evaluate(
            test_rows.target,
            predict_proba(artifact, test_rows),
            spec.display_name,
            spec.kind,
            config.threshold,
            config.split.describe(),
            artifact.hyperparameters,
            config.seed,
        )
    dispatcher.record(save_model(artifact, directory / ARTIFACT_FILE))
    training_log = list(getattr(artifact.model, "training_log", ()))
    dispatcher.send_json(directory / METRICS_FILE, {"record": record.to_dict(), "training_log": training_log})
    write_manifest(dispatcher, directory, "train", config, [spec])
    scores = (record.accuracy, record.precision, record.recall, record.f1, record.auc)
    dispatcher.send_large_table(
        ("Method", "ACC", "Precision", "Recall", "F1", "AUC"), [[record.method, *(format_metric(v) for v in scores)]]
    )
    return CommandStatus.SUCCEEDED


@subcommand_of(COMMAND)
def compare(dispatcher, config: RunConfig):
    """Evaluate every configured method on one shared split and keep the best-F1 model."""
    specs = config.pipeline_specs()
    dataset = load_run_dataset(config)
    directory = Path(config.output_dir)
    records = compare_algorithms(dataset, specs, config.split, config.threshold)
    table = table1_markdown(records)
    dispatcher.send_report(directory, TABLE1_STEM, table, "Model performance across algorithms")
    dispatcher.send_frame(directory / f"{TABLE1_STEM}.csv", records_frame(records))
    dispatcher.send_json(directory / METRICS_FILE, [record.to_dict() for record in records])
    best = best_record(records)
    notes: List[str] = []
    if best is None:
        dispatcher.send_warning("No method finished successfully; no best model was saved.")
    else:
        spec = specs[records.index(best)]
        dispatcher.record(save_model(refit(dataset, spec, config), directory / BEST_ARTIFACT_FILE))
        notes.append(f"best: {best.method} (f1 {best.f1:.4f})")
    write_manifest(dispatcher, directory, "compare", config, [spec for spec in specs if not spec.is_external], notes)
    dispatcher.send_markdown(table)
    return CommandStatus.SUCCEEDED


@subcommand_of(COMMAND)
def sweep(dispatcher, config: RunConfig):
    """Train the boosting pipeline at every configured depth and select the best F1."""
    spec = _single_spec(config, "gbdt")
    dataset = load_run_dataset(config)
    directory = Path(config.output_dir)
    result = depth_sweep(dataset, spec, config.depths, config.split, config.threshold)
    table = table2_markdown(result)
    dispatcher.send_report(directory, TABLE2_STEM, table, "Model performance across maximum depths")
    dispatcher.send_frame(directory / f"{TABLE2_STEM}.csv", sweep_frame(result))
    dispatcher.send_json(
        directory / METRICS_FILE,
        {"records": [record.to_dict() for record in result.records], "selected_depth": result.selected_depth},
    )
    write_manifest(dispatcher, directory, "sweep", config, [spec], [F1_NOTE])
    dispatcher.send_markdown(table)
    return CommandStatus.SUCCEEDED


@subcommand_of(COMMAND)
def explain(  # pylint: disable=too-many-arguments,too-many-locals
    dispatcher,
    artifact,
    data,
    out,
    summary=False,
    dependency=None,
    color=None,
    svg=False,
    importance=False,
    normalization="raw",
    config: Optional[RunConfig] = None,
    n_jobs=1,
    seed=DEFAULT_SEED,
):
    """Write SHAP summaries, dependency data, figures and importance scores for a saved model."""
    model = load_model(artifact)
    directory = Path(out)
    if not any((summary, dependency, importance, svg)):
        summary = True
    if importance:
        report = model_importance(model, normalization)
        dispatcher.send_frame(directory / IMPORTANCE_FILE, importance_frame(report))
    if summary or dependency or svg:
        rows = load_artifact_rows(model, data, config)
        shap, prepared = explain_rows(model, rows, n_jobs=n_jobs)
        ranked = shap_summary(shap)
        if summary:
            dispatcher.send_frame(directory / SHAP_SUMMARY_FILE, shap_summary_frame(ranked))
        if svg:
            dispatcher.send_svg(directory / "shap_summary.svg", summary_svg(shap, prepared.values, seed), "summary")
        if dependency:
            if dependency not in shap.feature_names:
                raise ExplainError(f"Unknown feature {dependency}; the model uses {', '.join(shap.feature_names)}.")
            table = dependency_data(shap, prepared, dependency, color)
            dispatcher.send_frame(directory / f"dependency_{dependency}.csv", dependency_frame(table))
            if svg:
                dispatcher.send_svg(
                    directory / f"dependency_{dependency}.svg", dependency_svg(table, shap.units), "dependency"
                )
        dispatcher.send_large_table(
            ("Rank", "Feature", "Mean abs SHAP"),
            [(rank, name, f"{value:.6f}") for rank, (name, value) in enumerate(ranked[:10], start=1)],
        )
    write_manifest(dispatcher, directory, "explain", config, notes=[f"artifact: {artifact}", f"data: {data}"])
    return CommandStatus.SUCCEEDED


@subcommand_of(COMMAND)
def predict(dispatcher, artifact, data, out, threshold=0.5, config: Optional[RunConfig] = None):
    """Score rows with a saved model and write ``row_id,probability,label``."""
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"threshold must lie in [0, 1]; got {threshold}.")
    model = load_model(artifact)
    rows = load_artifact_rows(model, data, config)
    probabilities = predict_proba(model, rows)
    frame = predictions_frame(rows.row_ids, probabilities, threshold)
    path = dispatcher.send_frame(Path(out) / PREDICTIONS_FILE, frame)
    dispatcher.send_markdown(f"Scored {rows.n_rows} rows; predictions written to `{path}`.")
    return CommandStatus.SUCCEEDED
