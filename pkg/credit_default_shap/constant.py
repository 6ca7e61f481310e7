"""Storage of data that will not change throughout the life cycle of application."""
from enum import IntEnum


class CommandStatus(IntEnum):
    """Process exit status of a subcommand."""

    SUCCEEDED = 0
    FAILED = 1
    IO_OR_CONFIG = 2
    UNSUPPORTED = 3


ARTIFACT_SCHEMA_VERSION = 1

DEFAULT_SEED = 42
DEFAULT_TEST_FRACTION = 0.2
DEFAULT_THRESHOLD = 0.5
DEFAULT_CARDINALITY_THRESHOLD = 32
DEFAULT_MAX_ONEHOT_CARDINALITY = 32
DEFAULT_SENTINELS = {"DAYS_EMPLOYED": 365243.0}
DEFAULT_TARGET_COLUMN = "TARGET"
DEFAULT_ID_COLUMN = "SK_ID_CURR"
DEFAULT_DEPTHS = (3, 4, 5, 6, 7)

COLUMN_NUMERIC = "numeric"
COLUMN_CATEGORICAL = "categorical-encoded"
COLUMN_KINDS = (COLUMN_NUMERIC, COLUMN_CATEGORICAL)

ENCODING_ONE_HOT = "one-hot"
ENCODING_FREQUENCY = "frequency"

AGGREGATIONS = ("count", "mean", "min", "max", "sum")

MODE_AVERAGED = "averaged-probability"
MODE_ADDITIVE = "additive-margin"

MODEL_KINDS = ("logistic", "tree", "forest", "gbdt", "adaboost", "knn", "gnb")
TREE_KINDS = ("tree", "forest", "gbdt", "adaboost")

# Methods of the reference comparison table that this package does not implement.
EXTERNAL_METHODS = {
    "svm": "SVM",
    "mlp": "MLP",
    "catboost": "CatBoost",
    "lightgbm": "LightGBM",
}
EXTERNAL_PLACEHOLDER = "external — not implemented"

# Display names used in the algorithm comparison table.
METHOD_NAMES = {
    "logistic": "Logistic Regression",
    "tree": "Decision Tree",
    "forest": "Random Forest",
    "knn": "KNN",
    "gnb": "Naive Bayes",
    "adaboost": "AdaBoost",
    "gbdt": "XGBoost",
}

DEFAULT_HYPERPARAMETERS = {
    "logistic": {"lr": 0.1, "iters": 500, "l2": 0.0, "class_weight": "none"},
    "tree": {"max_depth": 8, "min_samples_leaf": 20, "criterion": "gini", "class_weight": "none"},
    "forest": {
        "n_trees": 300,
        "max_depth": 8,
        "max_features": "sqrt",
        "bootstrap": True,
        "min_samples_leaf": 1,
        "criterion": "gini",
        "class_weight": "none",
    },
    "gbdt": {
        "n_rounds": 200,
        "max_depth": 4,
        "learning_rate": 0.1,
        "lambda_l2": 1.0,
        "gamma_min_gain": 0.0,
        "subsample": 1.0,
        "class_weight": "none",
    },
    "adaboost": {"n_rounds": 200, "stump_depth": 1},
    "knn": {"k": 25},
    "gnb": {},
}

SMOTE_DEFAULT_K = 5
SMOTE_DEFAULT_RATIO = 1.0

INFO_GAIN_BINS = 10
CORRELATION_THRESHOLD = 0.95
DEPENDENCY_COLOR_BINS = 10

GNB_VAR_SMOOTHING = 1e-9
ADABOOST_EPS_CLAMP = 1e-10

# Output file names written by the subcommands.
ARTIFACT_FILE = "model.json"
BEST_ARTIFACT_FILE = "best_model.json"
METRICS_FILE = "metrics.json"
MANIFEST_FILE = "run_manifest.json"
TABLE1_STEM = "table1"
TABLE2_STEM = "table2"
SHAP_SUMMARY_FILE = "shap_summary.csv"
IMPORTANCE_FILE = "importance.csv"
PREDICTIONS_FILE = "predictions.csv"
INGEST_SUMMARY_FILE = "ingest_summary.json"
INGEST_DATA_FILE = "dataset.csv"

SVG_WIDTH = 800
SVG_HEIGHT = 600
SVG_RAMP = ("#1E88E5", "#FF0D57")
