"""Credit default prediction toolkit: ingestion, preprocessing, model zoo, evaluation and TreeSHAP explanations."""
# Metadata is read from the installed distribution; pyproject.toml is the single source of the version.
from importlib import metadata

__version__ = metadata.version("credit-default-shap")
