"""Versioned CSV tables.

Layout: a ``# schema: <name>/<version>`` line, optional ``# key: value``
comment lines, a header row, then data rows. Floats are written with 12
significant digits and nothing time-dependent goes into the file, so equal
inputs give byte-identical output.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from rangeinfo.errors import SchemaError

SWEEP_SCHEMA = ("rangeinfo.sweep", 1)
THEOREM_SCHEMA = ("rangeinfo.theorem", 1)
DEMO_SCHEMA = ("rangeinfo.posterior-demo", 1)

KNOWN_SCHEMAS = {SWEEP_SCHEMA, THEOREM_SCHEMA, DEMO_SCHEMA}


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.12g}"
    return str(v)


def write_table(path: str | Path, schema: tuple[str, int], columns: Sequence[str],
                rows: Iterable[Mapping], comments: Mapping[str, object] | None = None) -> Path:
    """Write rows (mappings keyed by column) atomically enough for a single writer."""
    buf = io.StringIO()
    buf.write(f"# schema: {schema[0]}/{schema[1]}\n")
    for key, value in (comments or {}).items():
        buf.write(f"# {key}: {format_value(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def read_table(path: str | Path, schema: tuple[str, int]) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Return (comment metadata, data rows); raise SchemaError on a wrong schema or no data."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from None
    if not lines or not lines[0].startswith("# schema:"):
        raise SchemaError(f"{path}: missing '# schema:' header line")
    tag = lines[0].split(":", 1)[1].strip()
    name, _, version = tag.rpartition("/")
    if name != schema[0]:
        raise SchemaError(f"{path}: schema {tag!r}, expected {schema[0]}")
    if version != str(schema[1]):
        raise SchemaError(f"{path}: unsupported {name} schema version {version!r} (reader knows {schema[1]})")
    meta = {}
    body_start = 1
    while body_start < len(lines) and lines[body_start].startswith("#"):
        key, _, value = lines[body_start][1:].partition(":")
        meta[key.strip()] = value.strip()
        body_start += 1
    reader = csv.DictReader(lines[body_start:])
    rows = list(reader)
    if reader.fieldnames is None or not rows:
        raise SchemaError(f"{path}: table has no data rows")
    return meta, rows
