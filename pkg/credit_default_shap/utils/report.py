"""Markdown, HTML and CSV renderings of evaluation and explanation results."""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import markdown
import numpy as np
import pandas as pd

from credit_default_shap.constant import EXTERNAL_PLACEHOLDER
from credit_default_shap.utils.evaluation import STATUS_ERROR, STATUS_EXTERNAL, MetricsRecord, SweepResult
from credit_default_shap.utils.explain import DependencyTable, ImportanceReport
from credit_default_shap.utils.io import PathLike, atomic_write_text
from credit_default_shap.utils.models import classify

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.10g"
TABLE1_HEADER = ("Method", "ACC", "Precision", "Recall")
TABLE2_HEADER = ("Max_depth", "ACC", "Precision", "Recall", "F1")


def format_metric(value: Optional[float]) -> str:
    """Four decimals, as printed in the comparison tables."""
    if value is None:
        return ""
    return f"{value:.4f}"


def markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Pipe table with a plain ``|---|`` separator row."""
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


def _table1_row(record: MetricsRecord) -> List[str]:
    if record.status == STATUS_EXTERNAL:
        return [record.method, EXTERNAL_PLACEHOLDER, "", ""]
    if record.status == STATUS_ERROR:
        error_class = (record.error or "internal").split(":", 1)[0]
        return [record.method, f"error: {error_class}", "", ""]
    return [record.method, *(format_metric(value) for value in (record.accuracy, record.precision, record.recall))]


def table1_markdown(records: Sequence[MetricsRecord]) -> str:
    """Algorithm comparison table, one row per record in the given order."""
    return markdown_table(TABLE1_HEADER, [_table1_row(record) for record in records])


def table2_markdown(sweep: SweepResult) -> str:
    """Depth sweep table followed by the ``selected: <depth>`` line."""
    rows = [
        [str(depth), *(format_metric(value) for value in (rec.accuracy, rec.precision, rec.recall, rec.f1))]
        for depth, rec in zip(sweep.depths, sweep.records)
    ]
    return markdown_table(TABLE2_HEADER, rows) + f"\nselected: {sweep.selected_depth}\n"


def render_html(text: str, title: str) -> str:
    """Standalone HTML page for a Markdown report."""
    body = markdown.markdown(text, extensions=["tables"])
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>{title}</title>\n</head>\n<body>\n{body}\n</body>\n</html>\n"
    )


def write_markdown_report(directory: PathLike, stem: str, text: str, title: str) -> Tuple[Path, Path]:
    """Write ``<stem>.md`` and its HTML rendering ``<stem>.html``."""
    directory = Path(directory)
    md_path = atomic_write_text(directory / f"{stem}.md", text)
    html_path = atomic_write_text(directory / f"{stem}.html", render_html(text, title))
    logger.info("Wrote %s and %s", md_path, html_path)
    return md_path, html_path


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    """Atomic CSV export with a fixed float format and ``\\n`` line endings."""
    text = frame.to_csv(index=False, lineterminator="\n", float_format=CSV_FLOAT_FORMAT, na_rep="")
    return atomic_write_text(path, text)


def records_frame(records: Sequence[MetricsRecord]) -> pd.DataFrame:
    """Flat table of records; fold records of k-fold runs are not repeated here."""
    columns = ["method", "kind", "status", "accuracy", "precision", "recall", "f1", "auc", "split", "seed", "error"]
    return pd.DataFrame([{name: getattr(record, name) for name in columns} for record in records], columns=columns)


def sweep_frame(sweep: SweepResult) -> pd.DataFrame:
    """Per-depth metrics plus a ``selected`` flag."""
    return pd.DataFrame(
        {
            "max_depth": list(sweep.depths),
            "accuracy": [record.accuracy for record in sweep.records],
            "precision": [record.precision for record in sweep.records],
            "recall": [record.recall for record in sweep.records],
            "f1": [record.f1 for record in sweep.records],
            "auc": [record.auc for record in sweep.records],
            "selected": [depth == sweep.selected_depth for depth in sweep.depths],
        }
    )


def importance_frame(report: ImportanceReport) -> pd.DataFrame:
    """Ranked importance scores."""
    ranked = report.ranked()
    return pd.DataFrame(
        {
            "rank": np.arange(1, len(ranked) + 1),
            "feature": [name for name, _ in ranked],
            "score": [score for _, score in ranked],
            "source": report.source,
        }
    )


def shap_summary_frame(summary: Sequence[Tuple[str, float]]) -> pd.DataFrame:
    """Ranked mean absolute SHAP values."""
    return pd.DataFrame(
        {
            "rank": np.arange(1, len(summary) + 1),
            "feature": [name for name, _ in summary],
            "mean_abs_shap": [value for _, value in summary],
        }
    )


def dependency_frame(table: DependencyTable) -> pd.DataFrame:
    """The three dependency-plot columns in sorted order."""
    return pd.DataFrame(
        {
            "feature_value": table.feature_values,
            "shap_value": table.shap_values,
            "color_value": table.color_values,
        }
    )


def predictions_frame(row_ids: np.ndarray, probabilities: np.ndarray, threshold: float) -> pd.DataFrame:
    """Per-row probability and the label at ``threshold``."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    return pd.DataFrame(
        {
            "row_id": np.asarray(row_ids, dtype=np.int64),
            "probability": probabilities,
            "label": classify(probabilities, threshold).astype(np.int64),
        }
    )
