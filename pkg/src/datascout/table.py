"""In-memory tabular data and CSV round-tripping.

All cell values are kept as raw strings; typing happens in the profiler.
CSV output is RFC-4180 style: UTF-8, LF line endings, header row, minimal
quoting. Input decoding is UTF-8 with invalid bytes replaced.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field

from .errors import EmptyTable, RaggedRows


@dataclass
class Column:
    name: str
    values: list[str]


@dataclass
class TableData:
    """An ordered set of equally-long string columns."""

    columns: list[Column] = field(default_factory=list)

    @property
    def row_count(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def rows(self) -> list[list[str]]:
        return [list(vals) for vals in zip(*(c.values for c in self.columns))]

    @classmethod
    def from_columns(cls, pairs: list[tuple[str, list[str]]]) -> "TableData":
        """Build a table, deduplicating case-folded column names with _2, _3, ... suffixes."""
        lengths = {len(values) for _, values in pairs}
        if len(lengths) > 1:
            raise RaggedRows(
                "column lengths differ", lengths=sorted(len(v) for _, v in pairs)
            )
        taken: set[str] = set()
        columns = []
        for name, values in pairs:
            unique = _dedupe_name(name, taken)
            taken.add(unique.casefold())
            columns.append(Column(unique, list(values)))
        return cls(columns)

    @classmethod
    def from_rows(cls, header: list[str], rows: list[list[str]]) -> "TableData":
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise RaggedRows(
                    f"row {i + 2} has {len(row)} cells, expected {len(header)}",
                    row=i + 2,
                )
        return cls.from_columns(
            [(name, [row[j] for row in rows]) for j, name in enumerate(header)]
        )

    def require_nonempty(self) -> None:
        if not self.columns or self.row_count == 0:
            raise EmptyTable("table must have at least one column and one row")

    def content_hash(self) -> str:
        """SHA-256 over a canonical serialization; stable for identical content."""
        h = hashlib.sha256()
        for col in self.columns:
            h.update(col.name.encode("utf-8"))
            h.update(b"\x00")
            for v in col.values:
                h.update(v.encode("utf-8"))
                h.update(b"\x01")
            h.update(b"\x02")
        return h.hexdigest()


def _dedupe_name(name: str, taken: set[str]) -> str:
    if name.casefold() not in taken:
        return name
    n = 2
    while f"{name}_{n}".casefold() in taken:
        n += 1
    return f"{name}_{n}"


def read_csv_bytes(data: bytes) -> TableData:
    """Parse CSV bytes (UTF-8, invalid bytes replaced; first row is the header)."""
    return read_csv_text(data.decode("utf-8", errors="replace"))


def read_csv_text(text: str) -> TableData:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyTable("CSV has no header row") from None
    rows = [row for row in reader if row]
    return TableData.from_rows(header, rows)


def write_csv_text(table: TableData) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.column_names)
    for row in table.rows():
        writer.writerow(row)
    return out.getvalue()


def write_csv_bytes(table: TableData) -> bytes:
    return write_csv_text(table).encode("utf-8")
