"""SVG figures for SHAP summaries and dependency plots."""
import io
import logging
from pathlib import Path
from typing import Optional

import matplotlib
import numpy as np
from matplotlib.colors import LinearSegmentedColormap
from matplotlib.figure import Figure

from credit_default_shap.constant import SVG_HEIGHT, SVG_RAMP, SVG_WIDTH
from credit_default_shap.utils import rng
from credit_default_shap.utils.explain import (
    DependencyTable,
    ShapMatrix,
    shap_summary,
)
from credit_default_shap.utils.io import PathLike, atomic_write_text

logger = logging.getLogger(__name__)

DPI = 72
MAX_DISPLAY = 20
MISSING_COLOR = "#B0B0B0"
RAMP = LinearSegmentedColormap.from_list("shap-ramp", list(SVG_RAMP))


def _normalize_colors(values: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant column maps to 0.5 and NaN stays NaN."""
    values = np.asarray(values, dtype=np.float64)
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return np.full_like(values, np.nan)
    low, high = finite.min(), finite.max()
    if high == low:
        return np.where(np.isfinite(values), 0.5, np.nan)
    return (values - low) / (high - low)


def _scatter(axes, x: np.ndarray, y: np.ndarray, colors: np.ndarray):
    missing = ~np.isfinite(colors)
    if missing.any():
        axes.scatter(x[missing], y[missing], s=8, c=MISSING_COLOR, linewidths=0)
    return axes.scatter(
        x[~missing], y[~missing], s=8, c=colors[~missing], cmap=RAMP, vmin=0.0, vmax=1.0, linewidths=0
    )


def _svg_text(figure) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "credit-default-shap", "svg.fonttype": "path"}):
        figure.savefig(buffer, format="svg", dpi=DPI, metadata={"Date": None})
    return buffer.getvalue()


def _figure():
    figure = Figure(figsize=(SVG_WIDTH / DPI, SVG_HEIGHT / DPI), dpi=DPI)
    return figure, figure.subplots()


def summary_svg(shap: ShapMatrix, feature_values: np.ndarray, seed: int = 0, max_display: int = MAX_DISPLAY) -> str:
    """Beeswarm-style summary: one row per feature by decreasing mean |phi|, colored by feature value.

    Args:
        shap (ShapMatrix): Attributions.
        feature_values (np.ndarray): Model-ready feature matrix of the explained rows.
        seed (int): Seed of the vertical jitter.
        max_display (int): Number of top features drawn.

    Returns:
        str: SVG document.
    """
    ranked = [name for name, _ in shap_summary(shap)][:max_display]
    figure, axes = _figure()
    jitter = rng.stream(seed, "plot-jitter").uniform(-0.3, 0.3, size=shap.n_rows)
    mappable = None
    for position, name in enumerate(reversed(ranked)):
        col = shap.feature_names.index(name)
        colors = _normalize_colors(feature_values[:, col])
        mappable = _scatter(axes, shap.values[:, col], position + jitter, colors)
    axes.axvline(0.0, color="#808080", linewidth=0.8)
    axes.set_yticks(range(len(ranked)))
    axes.set_yticklabels(list(reversed(ranked)))
    axes.set_xlabel(f"SHAP value ({shap.units})")
    if mappable is not None:
        bar = figure.colorbar(mappable, ax=axes, ticks=[0.0, 1.0])
        bar.set_ticklabels(["Low", "High"])
        bar.set_label("Feature value")
    figure.tight_layout()
    return _svg_text(figure)


def dependency_svg(table: DependencyTable, units: str = "log-odds") -> str:
    """Scatter of a feature's value against its SHAP value, colored by the interaction feature."""
    figure, axes = _figure()
    mappable = _scatter(axes, table.feature_values, table.shap_values, _normalize_colors(table.color_values))
    axes.set_xlabel(table.feature)
    axes.set_ylabel(f"SHAP value for {table.feature} ({units})")
    bar = figure.colorbar(mappable, ax=axes, ticks=[0.0, 1.0])
    bar.set_ticklabels(["Low", "High"])
    bar.set_label(table.color_feature)
    figure.tight_layout()
    return _svg_text(figure)


def write_svg(text: str, path: PathLike, label: Optional[str] = None) -> Path:
    """Atomically write one SVG document."""
    path = atomic_write_text(path, text)
    logger.info("Wrote %s figure to %s", label or "SVG", path)
    return path
