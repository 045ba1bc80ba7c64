"""
CSV and JSON emission of result tables.

Floats are written in scientific notation with a fixed number of significant
digits, and the config is echoed with sorted keys, so identical runs give
byte-identical files. Files are written to a temporary sibling and moved
into place, so a failed write leaves nothing behind.
"""

import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from typing import Any, Dict, Optional, Union

from . import __version__
from .config import settings
from .exceptions import OutputError
from .models import ResultTable, TimeSeries

logger = logging.getLogger(__name__)

# keys that change how a run executes but never what it computes
EXECUTION_KEYS = ("out", "jobs")


def format_float(value: float, digits: int) -> str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits - 1}e}"


def _cell(value: Any, digits: int) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value, digits)
    return str(value)


def _json_value(value: Any, digits: int):
    if isinstance(value, bool) or isinstance(value, int) or value is None or isinstance(value, str):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(format_float(value, digits))
    return str(value)


def config_echo(table: ResultTable) -> Dict[str, Any]:
    echo = {k: v for k, v in table.config.items() if k not in EXECUTION_KEYS}
    echo["version"] = __version__
    return dict(sorted(echo.items()))


def render_csv(table: ResultTable, digits: int) -> str:
    buffer = io.StringIO()
    for key, value in config_echo(table).items():
        buffer.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    for note in table.notes:
        buffer.write(f"# note: {note}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v, digits) for v in row])
    return buffer.getvalue()


def render_json(table: ResultTable, digits: int) -> str:
    document = {
        "config": config_echo(table),
        "columns": table.columns,
        "rows": [[_json_value(v, digits) for v in row] for row in table.rows],
    }
    if table.notes:
        document["notes"] = table.notes
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    tmp_path = None
    try:
        with tempfile.NamedTemporaryFile("w", encoding="utf-8", newline="", dir=directory,
                                         prefix=".deh-", suffix=".tmp", delete=False) as handle:
            tmp_path = handle.name
            handle.write(text)
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path and os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise OutputError(f"Cannot write {path}: {e}") from e


def emit(table_or_series: Union[ResultTable, TimeSeries], fmt: str = "csv", path: Optional[str] = None,
         digits: Optional[int] = None) -> str:
    """Render a table (or a time series) and write it to ``path``, or stdout when no path is given."""
    table = table_or_series.to_table() if isinstance(table_or_series, TimeSeries) else table_or_series
    digits = digits or settings.output_precision
    if fmt == "csv":
        text = render_csv(table, digits)
    elif fmt == "json":
        text = render_json(table, digits)
    else:
        raise OutputError(f"Unknown output format: {fmt}")

    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        _write_atomic(path, text)
        logger.info(f"Wrote {len(table.rows)} rows to {path} ({fmt})")
    return text
