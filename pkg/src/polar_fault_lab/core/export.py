# polar_fault_lab/core/export.py

import contextlib
import csv
import json
import logging
import math
import os
import sys
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, TextIO

import numpy as np

logger = logging.getLogger(__name__)

SCHEMA_HEADER = "# polar-fault-lab v1"


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return f"{float(value):.17g}"
    return str(value)


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


@contextlib.contextmanager
def output_stream(path: Optional[str]) -> Iterator[TextIO]:
    """Yield a writable stream; a file that was being written is removed on failure"""
    if path is None or path == "-":
        yield sys.stdout
        return
    handle = open(path, "w", newline="")
    try:
        yield handle
    except BaseException:
        handle.close()
        with contextlib.suppress(OSError):
            os.remove(path)
        logger.debug(f"removed partial output {path}")
        raise
    else:
        handle.close()


def write_csv(stream: TextIO, rows: Iterable[Dict[str, Any]], columns: Optional[Sequence[str]] = None):
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    stream.write(SCHEMA_HEADER + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(col)) for col in columns])


def write_json(stream: TextIO, document: Any):
    json.dump(document, stream, indent=2, default=_json_default)
    stream.write("\n")


def write_rows(
    path: Optional[str],
    rows: Iterable[Dict[str, Any]],
    fmt: str = "csv",
    columns: Optional[Sequence[str]] = None,
):
    rows = list(rows)
    with output_stream(path) as stream:
        if fmt == "json":
            write_json(stream, rows)
        else:
            write_csv(stream, rows, columns)


def read_csv(stream: TextIO) -> List[Dict[str, str]]:
    lines = [line for line in stream if not line.startswith("#")]
    return list(csv.DictReader(lines))
