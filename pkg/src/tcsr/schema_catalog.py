"""SQLite schema introspection, content sampling, and prompt fragments.

Everything here is read-only over the target database. The rendered text
fragments (``desc_str`` schema blocks and ``fk_str`` foreign-key lines) are
pure functions of their inputs so prompts are reproducible byte for byte.
"""

from __future__ import annotations

import random
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import DatabaseError, EmptyDatabaseError, UnknownTableError

MAX_CELL_CHARS = 64


@dataclass(frozen=True)
class ForeignKey:
    local_column: str
    referenced_table: str
    referenced_column: str


@dataclass(frozen=True)
class TableInfo:
    name: str
    columns: Tuple[Tuple[str, str], ...]       # (name, declared_type)
    foreign_keys: Tuple[ForeignKey, ...] = ()

    @property
    def column_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.columns)


@dataclass(frozen=True)
class DatabaseSchema:
    database_name: str
    tables: Tuple[TableInfo, ...]

    def table(self, name: str) -> Optional[TableInfo]:
        """Case-insensitive table lookup returning the canonical TableInfo."""
        lowered = name.lower()
        for table in self.tables:
            if table.name.lower() == lowered:
                return table
        return None

    def column(self, table_name: str, column_name: str) -> Optional[str]:
        """Canonical column name within a table, or None."""
        table = self.table(table_name)
        if table is None:
            return None
        lowered = column_name.lower()
        for name in table.column_names:
            if name.lower() == lowered:
                return name
        return None


@dataclass
class ContentSamples:
    table: str
    rows: List[Tuple[str, ...]] = field(default_factory=list)

    @property
    def sample_count(self) -> int:
        return len(self.rows)


def open_read_only(db_path: str | Path) -> sqlite3.Connection:
    """Open a SQLite file read-only; raises DatabaseError if unreadable."""
    path = Path(db_path)
    if not path.is_file():
        raise DatabaseError(f"database file not found: {path}")
    try:
        conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
        conn.execute("SELECT 1")
    except sqlite3.Error as exc:
        raise DatabaseError(f"cannot open database {path}: {exc}") from exc
    return conn


def introspect(conn: sqlite3.Connection, database_name: str = "main") -> DatabaseSchema:
    """Read all user tables (catalog order), their columns, and foreign keys."""
    try:
        names = [
            row[0]
            for row in conn.execute(
                "SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY rowid"
            )
            if not row[0].startswith("sqlite_")
        ]
    except sqlite3.Error as exc:
        raise DatabaseError(f"introspection failed: {exc}") from exc
    if not names:
        raise EmptyDatabaseError("no user tables in database")

    tables = []
    for name in names:
        columns = tuple(
            (row[1], row[2] or "")
            for row in conn.execute(f'PRAGMA table_info("{name}")')
        )
        fks = tuple(
            ForeignKey(local_column=row[3], referenced_table=row[2], referenced_column=row[4] or "")
            for row in conn.execute(f'PRAGMA foreign_key_list("{name}")')
        )
        tables.append(TableInfo(name=name, columns=columns, foreign_keys=fks))
    return DatabaseSchema(database_name=database_name, tables=tuple(tables))


def _render_cell(value: object) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bytes):
        text = value.hex()
    else:
        text = str(value)
    if len(text) > MAX_CELL_CHARS:
        text = text[:MAX_CELL_CHARS] + "..."
    if isinstance(value, str):
        return f"'{text}'"
    return text


def sample_contents(
    conn: sqlite3.Connection, table: str, n: int, seed: int = 0
) -> ContentSamples:
    """Draw at most ``n`` distinct rows in a seeded pseudo-random order.

    Repeated calls with the same seed return identical samples. Fewer rows
    come back only when the table has fewer (distinct) rows.
    """
    if n < 0:
        raise ValueError("sample count must be >= 0")
    exists = conn.execute(
        "SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = ?", (table,)
    ).fetchone()
    if exists is None or table.startswith("sqlite_"):
        raise UnknownTableError(f"unknown table: {table}")
    samples = ContentSamples(table=table)
    if n == 0:
        return samples
    rowids = [row[0] for row in conn.execute(f'SELECT rowid FROM "{table}"')]
    random.Random(seed).shuffle(rowids)
    seen = set()
    for rowid in rowids:
        row = conn.execute(f'SELECT * FROM "{table}" WHERE rowid = ?', (rowid,)).fetchone()
        if row is None:
            continue
        rendered = tuple(_render_cell(cell) for cell in row)
        if rendered in seen:
            continue
        seen.add(rendered)
        samples.rows.append(rendered)
        if len(samples.rows) >= n:
            break
    return samples


def render_schema_prompt(
    schema: DatabaseSchema, samples: Optional[Dict[str, ContentSamples]] = None
) -> str:
    """The ``desc_str`` prompt fragment: one block per table, catalog order."""
    samples = samples or {}
    for table_name in samples:
        if schema.table(table_name) is None:
            raise UnknownTableError(f"sampled table not in schema: {table_name}")
    blocks = []
    for table in schema.tables:
        lines = [f"# Table: {table.name}"]
        lines.append("# Columns: " + ", ".join(f"{n} ({t})" if t else n for n, t in table.columns))
        table_samples = samples.get(table.name)
        if table_samples is None or table_samples.sample_count == 0:
            lines.append("# no samples")
        else:
            lines.append("# Sample rows:")
            for row in table_samples.rows:
                lines.append("#   " + " | ".join(row))
        blocks.append("\n".join(lines))
    return "\n".join(blocks)


def render_foreign_keys(schema: DatabaseSchema) -> str:
    """The ``fk_str`` prompt fragment: one ``table.col = table.col`` line per FK."""
    lines = []
    for table in schema.tables:
        for fk in table.foreign_keys:
            lines.append(
                f"{table.name}.{fk.local_column} = {fk.referenced_table}.{fk.referenced_column}"
            )
    return "\n".join(lines) if lines else "none"


def sample_all_tables(
    conn: sqlite3.Connection, schema: DatabaseSchema, n: int, seed: int = 0
) -> Dict[str, ContentSamples]:
    return {t.name: sample_contents(conn, t.name, n, seed) for t in schema.tables}


def distinct_column_values(
    conn: sqlite3.Connection, table: str, column: str, limit: int = 10
) -> List[str]:
    """A few distinct non-NULL values of one column, for synonym prompts."""
    rows = conn.execute(
        f'SELECT DISTINCT "{column}" FROM "{table}" WHERE "{column}" IS NOT NULL LIMIT ?',
        (limit,),
    ).fetchall()
    return [str(row[0]) for row in rows]
