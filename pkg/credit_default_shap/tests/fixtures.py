"""Small builders shared by the test modules."""
from pathlib import Path

import numpy as np

from credit_default_shap.constant import COLUMN_NUMERIC
from credit_default_shap.utils.dataset import Dataset


def make_dataset(values, target, names=None, row_ids=None) -> Dataset:
    """Numeric Dataset from a matrix and labels."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    names = names or [f"x{col}" for col in range(values.shape[1])]
    return Dataset(
        feature_names=tuple(names),
        column_kinds=(COLUMN_NUMERIC,) * len(names),
        values=values,
        target=np.asarray(target),
        row_ids=np.arange(1, len(values) + 1) if row_ids is None else row_ids,
    )


def random_dataset(n_rows=200, n_features=4, seed=0, prior=0.3) -> Dataset:
    """Gaussian features with a logistic dependence of the label on the first two columns."""
    generator = np.random.default_rng(seed)
    values = generator.normal(size=(n_rows, n_features))
    logits = 1.5 * values[:, 0] - values[:, 1] + np.log(prior / (1 - prior))
    target = (generator.random(n_rows) < 1 / (1 + np.exp(-logits))).astype(int)
    target[:2] = [0, 1]
    return make_dataset(values, target)


def write_text(directory, name: str, text: str) -> Path:
    """Write a fixture file and return its path."""
    path = Path(directory) / name
    path.write_text(text, encoding="utf-8")
    return path
