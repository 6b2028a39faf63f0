"""CSV/JSON plumbing shared by exports: floats at 17 significant digits so
values round-trip bit-exactly through text."""

from __future__ import annotations

import csv
import io
from pathlib import Path


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def csv_text(header: list[str], rows) -> str:
    """Render rows (iterables of already-formatted strings) as CSV text
    with a header row, '\n' line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def read_csv_columns(path) -> tuple[list[str], list[list[str]]]:
    """Header plus raw string rows of a CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV file") from None
        return header, [row for row in reader]
