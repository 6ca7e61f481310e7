"""Exception hierarchy shared by every stage of the pipeline.

Each exception carries the machine-readable ``error_class`` tag and the process ``exit_code`` used by the
command line: 0 success, 1 internal, 2 io/config, 3 unsupported operation.
"""
from typing import Any, Dict, Optional


class CreditModelError(Exception):
    """Base class for all errors raised by credit_default_shap."""

    error_class = "internal"
    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        """Store the message and optional structured context (for example the failing fold)."""
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def annotate(self, **context) -> "CreditModelError":
        """Return a copy of this error with extra context and the context keys prefixed to the message.

        Args:
            **context: Key/value pairs such as ``fold=2``.

        Returns:
            CreditModelError: New instance of the same class.
        """
        prefix = " ".join(f"{key} {value}:" for key, value in context.items())
        err = self.__class__.__new__(self.__class__)
        CreditModelError.__init__(err, f"{prefix} {self.message}", {**self.context, **context})
        for attr, value in vars(self).items():
            if attr not in ("message", "context"):
                setattr(err, attr, value)
        return err


class DataIOError(CreditModelError):
    """A data, config or artifact file could not be read or written."""

    error_class = "io"
    exit_code = 2


class ParseError(CreditModelError):
    """Malformed CSV content."""

    error_class = "parse"
    exit_code = 2


class SchemaError(CreditModelError):
    """Column layout or value domain does not match what the operation expects."""

    error_class = "schema"
    exit_code = 2


class ConfigError(CreditModelError):
    """Invalid configuration or hyperparameter value."""

    error_class = "config"
    exit_code = 2


class SplitError(CreditModelError):
    """A requested train/test split or fold plan cannot be built."""

    error_class = "split"
    exit_code = 2


class ImputerError(CreditModelError):
    """Imputation statistics cannot be fitted."""

    error_class = "imputer"
    exit_code = 2


class ResampleError(CreditModelError):
    """SMOTE cannot resample the given data."""

    error_class = "resample"
    exit_code = 2


class PersistenceError(CreditModelError):
    """A model artifact cannot be saved or loaded."""

    error_class = "persistence"
    exit_code = 2

    def __init__(self, message: str, reason: str = "persistence", context: Optional[Dict[str, Any]] = None):
        """Keep a short reason tag (``unknown-kind``, ``version-mismatch``, ``corrupted``)."""
        super().__init__(message, context)
        self.reason = reason
        self.error_class = reason


class TrainingError(CreditModelError):
    """A learner cannot be fitted on the given data."""

    error_class = "training"
    exit_code = 1


class EvaluationError(CreditModelError):
    """Metrics cannot be computed for the given labels/scores."""

    error_class = "evaluation"
    exit_code = 1


class ExplainError(CreditModelError):
    """Attribution or importance cannot be computed."""

    error_class = "explain"
    exit_code = 1


class UnsupportedExplainerError(ExplainError):
    """The model kind has no tree structure to explain."""

    error_class = "unsupported-explainer"
    exit_code = 3


class SmoteWarning(UserWarning):
    """Recoverable SMOTE adjustment, such as clamping k to the minority size."""


class DegenerateMetricWarning(UserWarning):
    """A precision or recall denominator was zero and the metric was reported as 0."""
