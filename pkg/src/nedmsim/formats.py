"""Byte-stable file formats: CSV tables, JSON summaries, atomic writes.

Every number is emitted in shortest round-trip form (``repr``), integers
as integers, so parsing an emitted file and re-emitting it reproduces the
bytes exactly. Files are written to a temporary sibling and renamed into
place. Schema identifiers are recorded in manifests so consumers can
detect format drift.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Sequence

from .comagnetometer import CycleRecord
from .inference import FlipDataset

__all__ = [
    "SCHEMA_CYCLES_CSV",
    "SCHEMA_FLIPS_CSV",
    "SCHEMA_SCAN_CSV",
    "SCHEMA_CONTRAST_CSV",
    "SCHEMA_SUMMARY_JSON",
    "SCHEMA_MANIFEST_JSON",
    "CYCLES_HEADER",
    "FLIPS_HEADER",
    "SCAN_HEADER",
    "CONTRAST_HEADER",
    "format_number",
    "parse_number",
    "render_csv",
    "parse_csv",
    "render_json",
    "atomic_write_text",
    "cycles_to_rows",
    "rows_to_cycles",
    "flip_dataset_to_rows",
    "rows_to_flip_dataset",
]

SCHEMA_CYCLES_CSV = "nedmsim.cycles-csv/1"
SCHEMA_FLIPS_CSV = "nedmsim.flips-csv/1"
SCHEMA_SCAN_CSV = "nedmsim.scan-csv/1"
SCHEMA_CONTRAST_CSV = "nedmsim.contrast-csv/1"
SCHEMA_SUMMARY_JSON = "nedmsim.summary-json/1"
SCHEMA_MANIFEST_JSON = "nedmsim.manifest-json/1"

CYCLES_HEADER = ("index", "polarity", "n_up", "n_down", "f_n", "f_hg", "R")
FLIPS_HEADER = ("xi", "trials", "flips")
SCAN_HEADER = ("xi", "p_closed", "p_quadrature", "abs_diff")
CONTRAST_HEADER = ("model", "trials", "flips", "fraction", "expected_fraction")


def format_number(value) -> str:
    """Shortest exact text for an int or float (ints stay integral)."""
    if isinstance(value, bool):
        raise TypeError("booleans are not table values")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def parse_number(text: str):
    """Inverse of :func:`format_number`: int if integral text, else float."""
    try:
        return int(text)
    except ValueError:
        return float(text)


def render_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Render a table; cells are numbers or strings, newline-terminated."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(c if isinstance(c, str) else format_number(c) for c in row)
        )
    return "\n".join(lines) + "\n"


def parse_csv(text: str, expected_header: Sequence[str]) -> list[list]:
    """Parse a table emitted by :func:`render_csv`; header must match."""
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty CSV")
    header = lines[0].split(",")
    if header != list(expected_header):
        raise ValueError(
            f"unexpected CSV header {header!r}, expected {list(expected_header)!r}"
        )
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        rows.append([_parse_cell(cell) for cell in line.split(",")])
    return rows


def _parse_cell(cell: str):
    try:
        return parse_number(cell)
    except ValueError:
        return cell


def render_json(obj) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write text via a temporary sibling file and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nedmsim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def cycles_to_rows(records: Sequence[CycleRecord]) -> list[list]:
    return [
        [rec.index, rec.polarity, rec.n_up, rec.n_down, rec.f_n, rec.f_hg, rec.r]
        for rec in records
    ]


def rows_to_cycles(rows: Sequence[Sequence]) -> list[CycleRecord]:
    return [
        CycleRecord(
            index=int(row[0]),
            polarity=int(row[1]),
            n_up=row[2],
            n_down=row[3],
            f_n=float(row[4]),
            f_hg=float(row[5]),
            r=float(row[6]),
        )
        for row in rows
    ]


def flip_dataset_to_rows(dataset: FlipDataset) -> list[list]:
    return [[x, n, k] for x, n, k in dataset.points()]


def rows_to_flip_dataset(rows: Sequence[Sequence]) -> FlipDataset:
    return FlipDataset.from_points(
        [(float(r[0]), int(r[1]), int(r[2])) for r in rows]
    )
