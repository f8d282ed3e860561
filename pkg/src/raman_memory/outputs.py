"""Atomic CSV and JSON writers for result tables.

Files are written to a temporary sibling first and moved into place with os.replace, so an
interrupted run never leaves a partial table behind. Floats are formatted with 12
significant digits, which makes reruns of the same configuration byte-identical.
"""

import csv
import json
import logging
import math
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".12g"


class Table(NamedTuple):
    """A result table: column names and rows of cell values."""

    header: list[str]
    rows: list[list[Any]]


def format_value(value: Any) -> str:
    """Render one table cell."""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        value = float(value)
        if math.isnan(value):
            return "nan"
        # Avoid "-0" flipping between runs
        return format(value + 0.0, FLOAT_FORMAT)
    return str(value)


def _atomic_write(path: Path, write) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            write(handle)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info(f"Wrote {path}")
    return path


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a table atomically.

    Args:
        path: Destination file
        header: Column names
        rows: Row values, formatted with format_value

    Returns:
        The destination path
    """

    def write(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])

    return _atomic_write(Path(path), write)


def to_jsonable(value: Any) -> Any:
    """Convert numpy values and nested containers into plain JSON types."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        value = float(value)
        return None if not math.isfinite(value) else value
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: str | Path, document: Any) -> Path:
    """Write a JSON document atomically with sorted keys."""

    def write(handle):
        json.dump(to_jsonable(document), handle, indent=2, sort_keys=True)
        handle.write("\n")

    return _atomic_write(Path(path), write)


def write_table(path: str | Path, table: Table) -> Path:
    """Write a Table as CSV."""
    return write_csv(path, table.header, table.rows)


def table_document(table: Table) -> dict[str, Any]:
    """Pack a table as {"columns": [...], "rows": [...]} for JSON output."""
    return {"columns": list(table.header), "rows": [list(row) for row in table.rows]}
