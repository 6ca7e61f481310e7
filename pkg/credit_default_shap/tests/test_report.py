"""Tests for the tables, CSV exports and SVG figures."""
import tempfile
import unittest
from pathlib import Path

import numpy as np
from defusedxml import ElementTree

from credit_default_shap.constant import EXTERNAL_PLACEHOLDER
from credit_default_shap.utils.evaluation import STATUS_ERROR, STATUS_EXTERNAL, MetricsRecord, SweepResult
from credit_default_shap.utils.explain import DependencyTable, ShapMatrix
from credit_default_shap.utils.plotting import dependency_svg, summary_svg
from credit_default_shap.utils.report import (
    format_metric,
    predictions_frame,
    table1_markdown,
    table2_markdown,
    write_frame,
    write_markdown_report,
)

SVG_NS = "{http://www.w3.org/2000/svg}"


def _record(method, f1, **kwargs):
    return MetricsRecord(method=method, kind="gbdt", accuracy=0.9, precision=0.5, recall=f1, f1=f1, **kwargs)


class TestTables(unittest.TestCase):
    """Markdown tables."""

    def test_table1_rows(self):
        """Metric rows, placeholder rows and error rows keep their order."""
        text = table1_markdown(
            [
                _record("XGBoost", 0.25),
                MetricsRecord(method="SVM", kind="svm", status=STATUS_EXTERNAL),
                MetricsRecord(method="KNN", kind="knn", status=STATUS_ERROR, error="config: k too large"),
            ]
        )
        lines = text.splitlines()
        self.assertEqual(lines[0], "| Method | ACC | Precision | Recall |")
        self.assertEqual(lines[1], "|---|---|---|---|")
        self.assertEqual(lines[2], "| XGBoost | 0.9000 | 0.5000 | 0.2500 |")
        self.assertEqual(lines[3], f"| SVM | {EXTERNAL_PLACEHOLDER} |  |  |")
        self.assertEqual(lines[4], "| KNN | error: config |  |  |")

    def test_table2_selected_line(self):
        """The sweep table ends with the selected depth."""
        sweep = SweepResult(depths=(3, 4), records=(_record("a", 0.3), _record("b", 0.4)), selected_depth=4)
        text = table2_markdown(sweep)
        self.assertTrue(text.startswith("| Max_depth | ACC | Precision | Recall | F1 |\n"))
        self.assertIn("| 4 | 0.9000 | 0.5000 | 0.4000 | 0.4000 |", text)
        self.assertTrue(text.endswith("\nselected: 4\n"))

    def test_format_metric(self):
        """Four decimals; missing values are blank."""
        self.assertEqual(format_metric(0.12345), "0.1235")
        self.assertEqual(format_metric(None), "")

    def test_html_rendering(self):
        """The HTML page holds a real table."""
        with tempfile.TemporaryDirectory() as tmp:
            md_path, html_path = write_markdown_report(tmp, "table1", table1_markdown([_record("a", 0.5)]), "t")
            self.assertEqual(md_path.suffix, ".md")
            html = html_path.read_text(encoding="utf-8")
            self.assertIn("<table>", html)
            self.assertIn("<td>0.9000</td>", html)

    def test_predictions_csv(self):
        """Prediction exports carry ids, probabilities and thresholded labels."""
        with tempfile.TemporaryDirectory() as tmp:
            frame = predictions_frame(np.array([5, 6]), np.array([0.25, 0.75]), 0.5)
            text = write_frame(frame, Path(tmp) / "p.csv").read_text(encoding="utf-8")
        self.assertEqual(text, "row_id,probability,label\n5,0.25,0\n6,0.75,1\n")


class TestSvg(unittest.TestCase):
    """SVG figures."""

    def setUp(self):
        generator = np.random.default_rng(0)
        self.values = generator.normal(size=(50, 3))
        self.values[0, 2] = np.nan
        self.shap = ShapMatrix(
            values=generator.normal(size=(50, 3)), base_value=0.0, feature_names=("a", "b", "c"), units="margin"
        )

    def test_summary_is_valid_svg_of_fixed_size(self):
        """The summary parses as SVG with an 800 by 600 view box."""
        root = ElementTree.fromstring(summary_svg(self.shap, self.values, seed=1))
        self.assertEqual(root.tag, f"{SVG_NS}svg")
        self.assertEqual(root.get("viewBox"), "0 0 800 600")

    def test_summary_is_deterministic(self):
        """Rendering twice with the same seed gives identical bytes."""
        self.assertEqual(summary_svg(self.shap, self.values, seed=2), summary_svg(self.shap, self.values, seed=2))

    def test_dependency_svg(self):
        """Dependency figures parse and are deterministic."""
        table = DependencyTable(
            feature="a",
            color_feature="c",
            feature_values=np.sort(self.values[:, 0]),
            shap_values=self.shap.values[:, 0],
            color_values=self.values[:, 2],
            row_ids=np.arange(50),
        )
        text = dependency_svg(table, units="margin")
        self.assertEqual(ElementTree.fromstring(text).get("viewBox"), "0 0 800 600")
        self.assertEqual(text, dependency_svg(table, units="margin"))
