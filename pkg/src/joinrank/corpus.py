"""Table corpus ingestion, column profiling, and deterministic text rendering."""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .errors import CorpusError, ParseError, ValidationError

COLUMN_TYPES = ("integer", "real", "text", "date", "unknown")

_INT_PATTERN = re.compile(r"^[+-]?\d+$")


def normalize_cell(cell: str) -> str:
    """Trim, casefold and collapse internal whitespace; '' marks a null-like cell."""
    return " ".join(cell.split()).casefold()


@dataclass(frozen=True)
class Column:
    header: str
    declared_type: str = "unknown"
    values: tuple[str, ...] = ()


@dataclass
class Table:
    name: str
    columns: list[Column]

    def __post_init__(self) -> None:
        if not self.columns:
            raise CorpusError(f"table {self.name!r} has no columns")
        headers = [c.header for c in self.columns]
        if any(not h for h in headers):
            raise CorpusError(f"table {self.name!r} has a column without a header")
        if len(set(headers)) != len(headers):
            raise CorpusError(f"table {self.name!r} has duplicate column headers")
        lengths = {len(c.values) for c in self.columns}
        if len(lengths) > 1:
            raise CorpusError(f"table {self.name!r} columns disagree on row count")
        for col in self.columns:
            if col.declared_type not in COLUMN_TYPES:
                raise CorpusError(
                    f"table {self.name!r} column {col.header!r} has unknown type "
                    f"{col.declared_type!r}"
                )

    @property
    def row_count(self) -> int:
        return len(self.columns[0].values)

    @property
    def rows(self) -> list[tuple[str, ...]]:
        return list(zip(*(c.values for c in self.columns)))

    def column_index(self, header: str) -> int | None:
        for i, col in enumerate(self.columns):
            if col.header == header:
                return i
        return None


@dataclass
class TableCorpus:
    """The retrieval universe: uniquely named tables in lexicographic order."""

    tables: list[Table]
    index: dict[str, Table]

    @classmethod
    def from_tables(cls, tables: list[Table]) -> "TableCorpus":
        ordered = sorted(tables, key=lambda t: t.name)
        index: dict[str, Table] = {}
        for table in ordered:
            if table.name in index:
                raise CorpusError(f"duplicate table name {table.name!r}")
            index[table.name] = table
        return cls(ordered, index)

    def __len__(self) -> int:
        return len(self.tables)

    def __iter__(self):
        return iter(self.tables)

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def get(self, name: str) -> Table:
        try:
            return self.index[name]
        except KeyError:
            raise CorpusError(f"no table named {name!r} in corpus") from None

    def content_hash(self) -> str:
        """Stable digest of names, headers, types and cells (cache invalidation key)."""
        digest = hashlib.sha256()
        for table in self.tables:
            digest.update(table.name.encode("utf-8") + b"\x1e")
            for col in table.columns:
                digest.update(col.header.encode("utf-8") + b"\x1f")
                digest.update(col.declared_type.encode("utf-8") + b"\x1f")
                for value in col.values:
                    digest.update(value.encode("utf-8") + b"\x1f")
        return digest.hexdigest()


def _parse_date(cell: str) -> bool:
    try:
        date.fromisoformat(cell)
        return True
    except ValueError:
        return False


def infer_column_type(values: tuple[str, ...], threshold: float = 0.95) -> str:
    """Pick integer/real/date when at least `threshold` of non-null cells parse as such."""
    non_null = [v.strip() for v in values if normalize_cell(v)]
    if not non_null:
        return "text"
    needed = threshold * len(non_null)
    if sum(1 for v in non_null if _INT_PATTERN.match(v)) >= needed:
        return "integer"

    def _is_real(v: str) -> bool:
        try:
            float(v)
            return True
        except ValueError:
            return False

    if sum(1 for v in non_null if _is_real(v)) >= needed:
        return "real"
    if sum(1 for v in non_null if _parse_date(v)) >= needed:
        return "date"
    return "text"


def _cell_to_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return str(value)


def _load_corpus_json(path: Path) -> list[Table]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", source=str(path), line=exc.lineno) from exc
    if not isinstance(payload, list):
        raise ParseError("top-level document must be a list of tables", source=str(path))
    tables = []
    for entry in payload:
        if not isinstance(entry, dict) or "name" not in entry:
            raise ParseError("table entry must be an object with a 'name'", source=str(path))
        name = str(entry["name"])
        specs = entry.get("columns") or []
        if not specs:
            raise ParseError(f"table {name!r} declares no columns", source=str(path))
        headers = [str(c.get("header", "")) for c in specs]
        types = [str(c.get("type", "unknown")) for c in specs]
        rows = entry.get("rows") or []
        cells: list[list[str]] = [[] for _ in specs]
        for row_index, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != len(specs):
                raise ParseError(
                    f"table {name!r} row {row_index}: expected {len(specs)} cells, "
                    f"got {len(row) if isinstance(row, list) else 'non-list'}",
                    source=str(path),
                )
            for k, value in enumerate(row):
                cells[k].append(_cell_to_text(value))
        columns = [
            Column(header=h, declared_type=t, values=tuple(vals))
            for h, t, vals in zip(headers, types, cells)
        ]
        tables.append(Table(name=name, columns=columns))
    return tables


def _load_csv_directory(path: Path, type_threshold: float) -> list[Table]:
    tables = []
    for file in sorted(path.glob("*.csv")):
        with file.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                headers = next(reader)
            except StopIteration:
                raise ParseError("empty CSV file", source=str(file), line=1) from None
            cells: list[list[str]] = [[] for _ in headers]
            for row in reader:
                if len(row) != len(headers):
                    raise ParseError(
                        f"expected {len(headers)} cells, got {len(row)}",
                        source=str(file),
                        line=reader.line_num,
                    )
                for k, value in enumerate(row):
                    cells[k].append(value)
        columns = [
            Column(header=h, declared_type=infer_column_type(tuple(vals), type_threshold),
                   values=tuple(vals))
            for h, vals in zip(headers, cells)
        ]
        tables.append(Table(name=file.stem, columns=columns))
    return tables


def load_corpus(path, format: str = "corpus-json", type_threshold: float = 0.95) -> TableCorpus:
    """Load a corpus from one JSON document or a directory of CSV files."""
    path = Path(path)
    if not path.exists():
        raise ParseError("path does not exist", source=str(path))
    if format == "corpus-json":
        tables = _load_corpus_json(path)
    elif format == "csv-directory":
        if not path.is_dir():
            raise ParseError("csv-directory format requires a directory", source=str(path))
        tables = _load_csv_directory(path, type_threshold)
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    return TableCorpus.from_tables(tables)


def render_table_text(table: Table, row_limit: int = 3) -> str:
    """Flatten a table to one deterministic string: name, then each column with values."""
    if row_limit < 0:
        raise ValueError("row_limit must be >= 0")
    parts = [table.name]
    for col in table.columns:
        segment = f"{col.header} ({col.declared_type})"
        values = [v.strip() for v in col.values[:row_limit]]
        if values:
            segment += ": " + ", ".join(values)
        parts.append(segment)
    return ". ".join(parts) + "."


def render_column_segments(table: Table, column_index: int) -> tuple[str, str, str]:
    """A column's text as (header, owning table name, other column headers)."""
    col = table.columns[column_index]
    others = ", ".join(c.header for i, c in enumerate(table.columns) if i != column_index)
    return (col.header, table.name, others)


def render_column_text(table: Table, column_index: int) -> str:
    header, name, others = render_column_segments(table, column_index)
    return f"column: {header}. table: {name}. context: {others}."


@dataclass(frozen=True)
class ColumnProfile:
    """Distinct values, uniqueness and rendered text for one column."""

    distinct_values: frozenset[str]
    uniqueness: float
    row_count: int
    segments: tuple[str, str, str]
    rendered_text: str
    declared_type: str = "unknown"


def profile_column(table: Table, column_index: int) -> ColumnProfile:
    """Profile one column; uniqueness = distinct non-null values / total rows."""
    col = table.columns[column_index]
    distinct = frozenset(filter(None, (normalize_cell(v) for v in col.values)))
    rows = len(col.values)
    uniqueness = len(distinct) / rows if rows else 0.0
    return ColumnProfile(
        distinct_values=distinct,
        uniqueness=uniqueness,
        row_count=rows,
        segments=render_column_segments(table, column_index),
        rendered_text=render_column_text(table, column_index),
        declared_type=col.declared_type,
    )


def profile_corpus(corpus: TableCorpus) -> dict[tuple[str, int], ColumnProfile]:
    """Profile every column; the result is immutable and shared by all queries."""
    profiles: dict[tuple[str, int], ColumnProfile] = {}
    for table in corpus:
        for k in range(len(table.columns)):
            profiles[(table.name, k)] = profile_column(table, k)
    return profiles


ColumnRef = tuple[str, int]
ConstraintPair = tuple[ColumnRef, ColumnRef]


@dataclass(frozen=True)
class GoldConstraintSet:
    """Known key/foreign-key column pairs, stored unordered."""

    pairs: frozenset[ConstraintPair]

    @staticmethod
    def canonical(a: ColumnRef, b: ColumnRef) -> ConstraintPair:
        return (a, b) if a <= b else (b, a)

    def covers(self, a: ColumnRef, b: ColumnRef) -> bool:
        return self.canonical(a, b) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


def _resolve_column_ref(corpus: TableCorpus, ref: str) -> ColumnRef | None:
    # Longest-prefix match on table name so headers containing dots still resolve.
    for name in sorted(corpus.index, key=len, reverse=True):
        if ref.startswith(name + "."):
            index = corpus.index[name].column_index(ref[len(name) + 1 :])
            if index is not None:
                return (name, index)
    return None


def load_gold_constraints(path, corpus: TableCorpus) -> GoldConstraintSet:
    """Read 'table.column<TAB>table.column' lines and validate them against the corpus."""
    path = Path(path)
    pairs: set[ConstraintPair] = set()
    offending: list[str] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        left, sep, right = line.partition("\t")
        if not sep:
            raise ParseError("expected two tab-separated column references",
                             source=str(path), line=lineno)
        a = _resolve_column_ref(corpus, left.strip())
        b = _resolve_column_ref(corpus, right.strip())
        if a is None or b is None:
            offending.append(line)
            continue
        pairs.add(GoldConstraintSet.canonical(a, b))
    if offending:
        raise ValidationError("constraint pairs reference unknown tables or columns", offending)
    return GoldConstraintSet(frozenset(pairs))
