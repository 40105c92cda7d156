import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"

Cell = float | int | str | None


def format_cell(value: Cell) -> str:
    """Full-precision text: repr for floats so every number parses back exactly."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


@dataclass
class CsvReport:
    """Header with units, data rows, then '#' metadata lines."""

    columns: Sequence[tuple[str, str]]  # (name, unit)
    rows: list[Sequence[Cell]] = field(default_factory=list)
    metadata: list[tuple[str, str]] = field(default_factory=list)

    def add_row(self, row: Sequence[Cell]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, header has {len(self.columns)}")
        self.rows.append(tuple(row))

    def add_rows(self, rows) -> None:
        for row in rows:
            self.add_row(row)

    def note(self, key: str, value: object) -> None:
        self.metadata.append((key, format_cell(value)))

    @property
    def header(self) -> list[str]:
        return [f"{name}[{unit}]" if unit else name for name, unit in self.columns]

    def render(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([format_cell(v) for v in row])
        for key, value in self.metadata:
            buffer.write(f"# {key}={value}\n")
        return buffer.getvalue()

    def write(self, path: Path | None) -> None:
        text = self.render()
        if path is None:
            print(text, end="")
            return
        Path(path).write_text(text)
        logger.info("wrote %d rows to %s", len(self.rows), path)


def read_report(text: str) -> tuple[list[str], list[list[str]], dict[str, str]]:
    """Split rendered CSV back into header, rows and metadata."""
    lines = text.splitlines()
    data = [line for line in lines if not line.startswith("#")]
    metadata = {}
    for line in lines:
        if line.startswith("# ") and "=" in line:
            key, value = line[2:].split("=", 1)
            metadata.setdefault(key, value)
    parsed = list(csv.reader(data))
    return parsed[0], parsed[1:], metadata
