"""Synthetic applications shaped like the Home Credit default data.

The generator plants a nonlinear default signal in ``EXT_SOURCE_2`` and ``EXT_SOURCE_3``, leaves
``EXT_SOURCE_1`` mostly missing, and marks unemployed applicants with the ``DAYS_EMPLOYED`` sentinel,
so every stage of the pipeline has something to do.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import expit

from credit_default_shap.constant import DEFAULT_ID_COLUMN, DEFAULT_SEED, DEFAULT_TARGET_COLUMN
from credit_default_shap.utils import rng
from credit_default_shap.utils.errors import ConfigError
from credit_default_shap.utils.io import PathLike, atomic_write_text

logger = logging.getLogger(__name__)

DAYS_EMPLOYED_SENTINEL = 365243
FIRST_ID = 100002


@dataclass(frozen=True)
class SampleConfig:
    """Shape of a generated corpus."""

    n_rows: int = 1000
    seed: int = DEFAULT_SEED
    default_rate: float = 0.2
    ext_source_1_missing: float = 0.55
    unemployed_fraction: float = 0.18
    bureau: bool = False

    def __post_init__(self):
        """Validate sizes and fractions."""
        if self.n_rows < 10:
            raise ConfigError(f"A sample needs at least 10 rows; got {self.n_rows}.")
        for name in ("default_rate", "ext_source_1_missing", "unemployed_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie strictly between 0 and 1; got {value}.")


def planted_logit(ext2: np.ndarray, ext3: np.ndarray) -> np.ndarray:
    """Default log-odds contribution of the two dominant scores (before the intercept)."""
    both_low = (ext2 < 0.35) & (ext3 < 0.4)
    return -2.5 * ext2 - 2.5 * ext3 + 2.0 * both_low + 0.6 * np.cos(4.0 * np.pi * ext3) + 1.2 * (ext2 < 0.2)


def _intercept(logits: np.ndarray, rate: float) -> float:
    return brentq(lambda shift: expit(logits + shift).mean() - rate, -30.0, 30.0)


def generate_applications(config: SampleConfig) -> pd.DataFrame:
    """Main application table with ``SK_ID_CURR`` ids and a binary ``TARGET``."""
    n = config.n_rows
    scores = rng.stream(config.seed, "sample-scores")
    ext1 = scores.beta(4.0, 3.0, size=n)
    ext2 = scores.beta(4.0, 2.5, size=n)
    ext3 = scores.beta(3.5, 3.0, size=n)

    people = rng.stream(config.seed, "sample-people")
    days_birth = -people.integers(7500, 25000, size=n)
    days_employed = -people.integers(0, 15000, size=n)
    unemployed = people.random(n) < config.unemployed_fraction
    income = np.round(np.exp(people.normal(11.9, 0.5, size=n)), 2)
    credit = np.round(income * people.uniform(1.0, 6.0, size=n), 2)
    annuity = np.round(credit / people.uniform(10.0, 40.0, size=n), 2)
    children = people.poisson(0.4, size=n)
    gender = people.choice(np.array(["F", "M", "XNA"]), size=n, p=[0.65, 0.3499, 0.0001])
    contract = people.choice(np.array(["Cash loans", "Revolving loans"]), size=n, p=[0.9, 0.1])
    education = people.choice(
        np.array(["Secondary / secondary special", "Higher education", "Incomplete higher", "Lower secondary"]),
        size=n,
        p=[0.71, 0.24, 0.035, 0.015],
    )
    own_car = people.choice(np.array(["Y", "N"]), size=n, p=[0.34, 0.66])
    region_rating = people.choice(np.array([1, 2, 3]), size=n, p=[0.1, 0.74, 0.16])

    logits = (
        planted_logit(ext2, ext3)
        - 0.8 * ext1
        + 0.3 * unemployed
        + 0.25 * (days_birth > -12000)
        + 0.15 * (own_car == "N")
        + 0.2 * (region_rating == 3)
    )
    probability = expit(logits + _intercept(logits, config.default_rate))
    target = (rng.stream(config.seed, "sample-target").random(n) < probability).astype(np.int64)
    ext1_missing = rng.stream(config.seed, "sample-missing").random(n) < config.ext_source_1_missing

    frame = pd.DataFrame(
        {
            DEFAULT_ID_COLUMN: FIRST_ID + np.arange(n),
            DEFAULT_TARGET_COLUMN: target,
            "NAME_CONTRACT_TYPE": contract,
            "CODE_GENDER": gender,
            "FLAG_OWN_CAR": own_car,
            "CNT_CHILDREN": children,
            "AMT_INCOME_TOTAL": income,
            "AMT_CREDIT": credit,
            "AMT_ANNUITY": annuity,
            "NAME_EDUCATION_TYPE": education,
            "REGION_RATING_CLIENT": region_rating,
            "DAYS_BIRTH": days_birth,
            "DAYS_EMPLOYED": np.where(unemployed, DAYS_EMPLOYED_SENTINEL, days_employed),
            "EXT_SOURCE_1": np.where(ext1_missing, np.nan, np.round(ext1, 6)),
            "EXT_SOURCE_2": np.round(ext2, 6),
            "EXT_SOURCE_3": np.round(ext3, 6),
        }
    )
    logger.info("Generated %s applications with %s defaults", n, int(target.sum()))
    return frame


def generate_bureau(applications: pd.DataFrame, seed: int) -> pd.DataFrame:
    """Prior credits per applicant; defaulters carry slightly more overdue days."""
    generator = rng.stream(seed, "sample-bureau")
    counts = generator.poisson(2.0, size=len(applications))
    owners = np.repeat(applications[DEFAULT_ID_COLUMN].to_numpy(), counts)
    defaulted = np.repeat(applications[DEFAULT_TARGET_COLUMN].to_numpy(), counts)
    total = int(counts.sum())
    overdue = generator.poisson(np.where(defaulted == 1, 3.0, 1.0)) * (generator.random(total) < 0.15)
    return pd.DataFrame(
        {
            DEFAULT_ID_COLUMN: owners,
            "SK_ID_BUREAU": 5000000 + np.arange(total),
            "DAYS_CREDIT": -generator.integers(1, 2900, size=total),
            "AMT_CREDIT_SUM": np.round(np.exp(generator.normal(12.0, 1.0, size=total)), 2),
            "CREDIT_DAY_OVERDUE": overdue,
        }
    )


def _csv_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n", na_rep="")


def generate_sample(
    path: PathLike, config: Optional[SampleConfig] = None, bureau_path: Optional[PathLike] = None
) -> Tuple[Path, Optional[Path]]:
    """Write the application table (and, when configured, the bureau table) as CSV.

    Args:
        path (PathLike): Destination of the application table.
        config (SampleConfig): Corpus shape; defaults to 1,000 rows with seed 42.
        bureau_path (PathLike): Destination of the bureau table; defaults to ``bureau.csv`` next to ``path``.

    Returns:
        tuple: Paths of the written application and bureau files (the latter ``None`` without a bureau table).
    """
    config = config or SampleConfig()
    applications = generate_applications(config)
    main_path = atomic_write_text(path, _csv_text(applications))
    if not config.bureau:
        return main_path, None
    bureau_path = Path(bureau_path) if bureau_path is not None else main_path.with_name("bureau.csv")
    written = atomic_write_text(bureau_path, _csv_text(generate_bureau(applications, config.seed)))
    return main_path, written
