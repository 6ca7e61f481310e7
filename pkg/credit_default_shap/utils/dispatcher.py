"""Subcommand registry and the output channel handed to every subcommand."""
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO

import pandas as pd

from credit_default_shap.utils.errors import ConfigError
from credit_default_shap.utils.io import PathLike, write_json
from credit_default_shap.utils.plotting import write_svg
from credit_default_shap.utils.report import markdown_table, write_frame, write_markdown_report

logger = logging.getLogger(__name__)

_SUBCOMMANDS: Dict[str, Dict[str, Callable]] = {}


def subcommand_of(command: str) -> Callable:
    """Register the decorated function as ``<command> <function-name-with-hyphens>``."""

    def register(func: Callable) -> Callable:
        _SUBCOMMANDS.setdefault(command, {})[func.__name__.replace("_", "-")] = func
        return func

    return register


def registered_subcommands(command: str) -> List[str]:
    """Names of the subcommands registered for ``command``, in registration order."""
    return list(_SUBCOMMANDS.get(command, {}))


def handle_subcommands(command: str, subcommand: str, dispatcher: "Dispatcher", **kwargs) -> Any:
    """Look up and run one registered subcommand."""
    handlers = _SUBCOMMANDS.get(command, {})
    if subcommand not in handlers:
        known = ", ".join(registered_subcommands(command))
        raise ConfigError(f"Unknown subcommand {subcommand!r} of {command}; expected one of: {known}.")
    logger.info("Running %s %s", command, subcommand)
    return handlers[subcommand](dispatcher, **kwargs)


class Dispatcher:
    """Where a subcommand sends its messages and files.

    Human-readable messages go to ``stdout``; the one-line machine-readable error goes to ``stderr``. Every file
    written through the dispatcher is recorded in :attr:`outputs` so the run manifest can list it.
    """

    def __init__(self, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None):
        """Bind the output streams; defaults are the process streams."""
        self.stdout = stdout if stdout is not None else sys.stdout
        self.stderr = stderr if stderr is not None else sys.stderr
        self.outputs: List[Path] = []

    def send_markdown(self, text: str):
        """Print a message."""
        self.stdout.write(text.rstrip("\n") + "\n")

    def send_large_table(self, header: Sequence[str], rows: Sequence[Sequence[Any]]):
        """Print a table as Markdown."""
        self.send_markdown(markdown_table(header, [[str(cell) for cell in row] for row in rows]))

    def send_warning(self, text: str):
        """Log a warning through the module logger; nothing is written to the streams directly."""
        logger.warning("%s", text)

    def send_error(self, error_class: str, message: str):
        """Emit the single JSON error line."""
        self.stderr.write(json.dumps({"error": error_class, "message": message}, sort_keys=True) + "\n")
        self.stderr.flush()

    def _record(self, path: Path) -> Path:
        self.outputs.append(Path(path))
        return path

    def send_json(self, path: PathLike, payload: Any) -> Path:
        """Write a JSON file."""
        return self._record(write_json(path, payload))

    def send_frame(self, path: PathLike, frame: pd.DataFrame) -> Path:
        """Write a CSV export."""
        return self._record(write_frame(frame, path))

    def send_report(self, directory: PathLike, stem: str, text: str, title: str):
        """Write a Markdown report and its HTML rendering."""
        for path in write_markdown_report(directory, stem, text, title):
            self._record(path)

    def send_svg(self, path: PathLike, text: str, label: Optional[str] = None) -> Path:
        """Write an SVG figure."""
        return self._record(write_svg(text, path, label))

    def record(self, path: PathLike) -> Path:
        """Track a file written by another helper."""
        return self._record(Path(path))
