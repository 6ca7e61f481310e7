"""Unit tests for credit_default_shap."""
