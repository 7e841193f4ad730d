"""Deterministic number and CSV formatting shared by exports and the CLI."""

from __future__ import annotations

import math
from typing import Iterable, Sequence, TextIO, Union

Cell = Union[str, int, float]


def round12(value: float) -> float:
    """Clamp a float to 12 significant digits for platform-stable serialization."""
    if value == 0.0 or not math.isfinite(value):
        return 0.0 if value == 0.0 else value
    return float(format(value, ".12g"))


def format_number(value: Union[int, float]) -> str:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"not a table number: {value!r}")
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


def csv_cell(value: Cell) -> str:
    # Dialect: strings always quoted (embedded quotes doubled), numbers bare.
    if isinstance(value, str):
        return '"' + value.replace('"', '""') + '"'
    return format_number(value)


def csv_line(cells: Sequence[Cell]) -> str:
    return ",".join(csv_cell(cell) for cell in cells)


def write_csv(
    stream: TextIO, header: Sequence[str], rows: Iterable[Sequence[Cell]]
) -> None:
    """Header plus rows, comma-separated, LF line endings."""
    stream.write(csv_line(tuple(header)) + "\n")
    for row in rows:
        stream.write(csv_line(row) + "\n")
