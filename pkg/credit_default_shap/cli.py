"""Command-line entry point: ``credit-default-shap <subcommand> ...``."""
import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from credit_default_shap import __version__
from credit_default_shap.constant import DEFAULT_SEED, DEFAULT_THRESHOLD
from credit_default_shap.utils.config import RunConfig, load_config
from credit_default_shap.utils.dispatcher import Dispatcher
from credit_default_shap.utils.errors import CreditModelError
from credit_default_shap.utils.explain import NORMALIZATIONS
from credit_default_shap.worker import credit_default_shap, notify_user_of_error

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

CONFIG_COMMANDS = ("ingest", "train", "compare", "sweep")


def _add_run_flags(parser: argparse.ArgumentParser, split_flags: bool = True):
    parser.add_argument("--config", required=True, help="Run configuration (JSON)")
    parser.add_argument("--out", help="Output directory, overrides output_dir")
    parser.add_argument("--seed", type=int, help="Seed for every random stream of the run")
    if split_flags:
        split_group = parser.add_mutually_exclusive_group()
        split_group.add_argument("--test-fraction", type=float, help="Holdout fraction of a stratified split")
        split_group.add_argument("--folds", type=int, help="Number of stratified cross-validation folds")
        parser.add_argument("--model", action="append", help="Model kind; repeat for several (compare)")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subparser per subcommand."""
    parser = argparse.ArgumentParser(prog="credit-default-shap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log errors only")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    sample = subparsers.add_parser("generate-sample", help="Write a synthetic application table")
    sample.add_argument("--out", required=True, help="Destination CSV")
    sample.add_argument("--rows", type=int, default=1000)
    sample.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sample.add_argument("--bureau", action="store_true", help="Also write bureau.csv next to --out")

    _add_run_flags(subparsers.add_parser("ingest", help="Write the model-ready dataset"), split_flags=False)
    _add_run_flags(subparsers.add_parser("train", help="Fit, evaluate and save one model"))
    compare = subparsers.add_parser("compare", help="Compare algorithms on one split")
    _add_run_flags(compare)
    compare.add_argument("--include-external", action="store_true", help="Add placeholder rows")
    sweep = subparsers.add_parser("sweep", help="Sweep the boosting max_depth")
    _add_run_flags(sweep)
    sweep.add_argument("--depths", type=int, nargs="+", help="Depths to train, e.g. --depths 3 4 5 6 7")

    explain = subparsers.add_parser("explain", help="SHAP summaries, dependency data and importance")
    explain.add_argument("artifact", help="Saved model JSON")
    explain.add_argument("data", help="Rows to explain (CSV)")
    explain.add_argument("--out", required=True, help="Output directory")
    explain.add_argument("--summary", action="store_true", help="Write shap_summary.csv (default)")
    explain.add_argument("--dependency", metavar="FEATURE", help="Write dependency_<FEATURE>.csv")
    explain.add_argument("--color", metavar="FEATURE", help="Color feature of the dependency data")
    explain.add_argument("--svg", action="store_true", help="Also draw SVG figures")
    explain.add_argument("--importance", action="store_true", help="Write importance.csv")
    explain.add_argument("--normalization", choices=NORMALIZATIONS, default="raw")
    explain.add_argument("--config", help="Run configuration whose auxiliary joins are repeated")
    explain.add_argument("--n-jobs", type=int, default=1)
    explain.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed of the plot jitter")

    predict = subparsers.add_parser("predict", help="Score rows with a saved model")
    predict.add_argument("artifact", help="Saved model JSON")
    predict.add_argument("data", help="Rows to score (CSV)")
    predict.add_argument("--out", required=True, help="Output directory")
    predict.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    predict.add_argument("--config", help="Run configuration whose auxiliary joins are repeated")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    """Root handler on stderr; warnings raised through ``warnings.warn`` become log records."""
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.captureWarnings(True)


def _run_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config)
    models: Optional[List[str]] = getattr(args, "model", None)
    return config.with_overrides(
        seed=args.seed,
        output_dir=args.out,
        test_fraction=getattr(args, "test_fraction", None),
        folds=getattr(args, "folds", None),
        depths=getattr(args, "depths", None),
        models=models,
    )


def command_arguments(args: argparse.Namespace) -> dict:
    """Keyword arguments of the worker handler selected by ``args.subcommand``."""
    if args.subcommand == "generate-sample":
        return {"out": args.out, "rows": args.rows, "seed": args.seed, "bureau": args.bureau}
    if args.subcommand in CONFIG_COMMANDS:
        config = _run_config(args)
        if getattr(args, "include_external", False):
            config = replace(config, include_external=True)
        return {"config": config}
    config = load_config(args.config) if args.config else None
    common = {"artifact": args.artifact, "data": args.data, "out": args.out, "config": config}
    if args.subcommand == "predict":
        return {**common, "threshold": args.threshold}
    return {
        **common,
        "summary": args.summary,
        "dependency": args.dependency,
        "color": args.color,
        "svg": args.svg,
        "importance": args.importance,
        "normalization": args.normalization,
        "n_jobs": args.n_jobs,
        "seed": args.seed,
    }


def main(argv: Optional[List[str]] = None) -> int:
    """Parse flags, run the subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    dispatcher = Dispatcher()
    try:
        kwargs = command_arguments(args)
    except CreditModelError as err:
        return notify_user_of_error(dispatcher, err)
    return credit_default_shap(args.subcommand, dispatcher, **kwargs)


if __name__ == "__main__":
    sys.exit(main())
