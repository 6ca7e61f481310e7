"""File helpers shared by the command handlers."""
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

from credit_default_shap.utils.errors import DataIOError

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text to ``path`` through a temporary file in the same directory, then rename it into place.

    Args:
        path (str): Destination file.
        text (str): Content, written as UTF-8 with ``\\n`` newlines.

    Returns:
        Path: The destination path.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", newline="\n", dir=path.parent, prefix=f".{path.name}.", delete=False
        ) as handle:
            handle.write(text)
            tmp_name = handle.name
        os.replace(tmp_name, path)
    except OSError as err:
        raise DataIOError(f"Unable to write {path}: {err}") from err
    return path


def dumps_json(payload: Any) -> str:
    """Serialize to the canonical JSON text used for every artifact, manifest and metrics file."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: PathLike, payload: Any) -> Path:
    """Atomically write ``payload`` as canonical JSON."""
    return atomic_write_text(path, dumps_json(payload))


def read_json(path: PathLike) -> Any:
    """Read a JSON file, mapping a missing file to an io error."""
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"File {path} does not exist.")
    with open(path, mode="r", encoding="utf-8") as handle:
        return json.load(handle)
