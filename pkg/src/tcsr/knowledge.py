"""Encoding-knowledge table: classification, persistence, and alignment.

A search result whose probe returned exactly one distinct value (and was not
truncated) is normalized into a five-field knowledge record. Records are also
importable from a relationship-matching table in the source database. Each
keyword is then aligned to the record with the highest embedding cosine
similarity; ties break by insertion order, which favors imported relation
knowledge because imports precede mining.
"""

from __future__ import annotations

import enum
import json
import sqlite3
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import RelationMapping
from .errors import MappingSpecError
from .extraction import Keyword
from .fuzzer import SearchResult
from .gateway import Embedder, EmbeddingVector


class Provenance(str, enum.Enum):
    RelationTable = "relation_table"
    FuzzMined = "fuzz_mined"


@dataclass(frozen=True)
class EncodingKnowledge:
    keyword: str
    database_name: str
    table_name: str
    column_name: str
    stored_value: str
    provenance: Provenance = Provenance.FuzzMined

    def __post_init__(self):
        for name in ("keyword", "database_name", "table_name", "column_name", "stored_value"):
            if not getattr(self, name):
                raise ValueError(f"encoding knowledge field {name} must be non-empty")

    def content_key(self) -> tuple:
        return (self.keyword, self.database_name, self.table_name, self.column_name, self.stored_value)

    def embedding_text(self) -> str:
        return f"{self.keyword} | {self.table_name}.{self.column_name} | {self.stored_value}"

    def to_json(self) -> str:
        return json.dumps(
            {
                "keyword": self.keyword,
                "database": self.database_name,
                "table": self.table_name,
                "column": self.column_name,
                "value": self.stored_value,
                "provenance": self.provenance.value,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "EncodingKnowledge":
        record = json.loads(line)
        return cls(
            keyword=record["keyword"],
            database_name=record["database"],
            table_name=record["table"],
            column_name=record["column"],
            stored_value=record["value"],
            provenance=Provenance(record["provenance"]),
        )


class ClassificationLabel(enum.Enum):
    UniqueValue = "unique_value"
    Discard = "discard"


@dataclass(frozen=True)
class Classification:
    label: ClassificationLabel
    value: Optional[str] = None


def classify(result: SearchResult) -> Classification:
    """Unique iff exactly one distinct value came back and the limit held."""
    if len(result.distinct_values) == 1 and not result.truncated and result.error is None:
        return Classification(ClassificationLabel.UniqueValue, result.distinct_values[0])
    return Classification(ClassificationLabel.Discard)


def normalize(keyword: Keyword, database_name: str, result: SearchResult) -> EncodingKnowledge:
    """Turn a unique-value search result into a knowledge record."""
    outcome = classify(result)
    if outcome.label != ClassificationLabel.UniqueValue:
        raise ValueError("normalize requires a unique-value search result")
    return EncodingKnowledge(
        keyword=keyword.surface,
        database_name=database_name,
        table_name=result.seed.table,
        column_name=result.seed.column,
        stored_value=outcome.value or "",
        provenance=Provenance.FuzzMined,
    )


@dataclass
class AlignmentResult:
    keyword: str
    best: Optional[EncodingKnowledge]
    score: float


class KnowledgeTable:
    """Append-ordered record store with duplicate suppression (all five fields)."""

    def __init__(self, entries: Optional[List[EncodingKnowledge]] = None):
        self._entries: List[EncodingKnowledge] = []
        self._keys: set = set()
        self._lock = threading.Lock()
        for entry in entries or []:
            self.upsert(entry)

    @property
    def entries(self) -> List[EncodingKnowledge]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def upsert(self, entry: EncodingKnowledge) -> bool:
        """Append unless an identical record exists; returns True if added."""
        with self._lock:
            key = entry.content_key()
            if key in self._keys:
                return False
            self._keys.add(key)
            self._entries.append(entry)
            return True

    def for_database(self, database_name: str) -> List[EncodingKnowledge]:
        return [e for e in self._entries if e.database_name == database_name]

    def save(self, path: str | Path) -> None:
        with self._lock:
            lines = [entry.to_json() for entry in self._entries]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeTable":
        path = Path(path)
        table = cls()
        if not path.is_file():
            return table
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                table.upsert(EncodingKnowledge.from_json(line))
        return table


def import_relation_knowledge(
    conn: sqlite3.Connection, mapping: RelationMapping, database_name: str
) -> List[EncodingKnowledge]:
    """One relation-provenance record per row of the relationship table.

    ``target_column_name_or_column`` is read per row when it names a column of
    the mapping table, otherwise it is taken as a literal column name of the
    target table.
    """
    if not mapping.is_set():
        return []
    info = conn.execute(f'PRAGMA table_info("{mapping.table}")').fetchall()
    if not info:
        raise MappingSpecError(f"mapping table not found: {mapping.table}")
    mapping_columns = {row[1] for row in info}
    for name in (mapping.keyword_column, mapping.target_value_column):
        if name not in mapping_columns:
            raise MappingSpecError(f"mapping column not found in {mapping.table}: {name}")
    per_row_column = mapping.target_column_name_or_column in mapping_columns

    if per_row_column:
        rows = conn.execute(
            f'SELECT "{mapping.keyword_column}", "{mapping.target_column_name_or_column}", '
            f'"{mapping.target_value_column}" FROM "{mapping.table}"'
        ).fetchall()
    else:
        rows = conn.execute(
            f'SELECT "{mapping.keyword_column}", "{mapping.target_value_column}" '
            f'FROM "{mapping.table}"'
        ).fetchall()

    records = []
    for row in rows:
        if per_row_column:
            keyword, column_name, value = row
        else:
            keyword, value = row
            column_name = mapping.target_column_name_or_column
        if keyword is None or value is None or column_name is None:
            continue
        records.append(
            EncodingKnowledge(
                keyword=str(keyword),
                database_name=database_name,
                table_name=mapping.target_table or mapping.table,
                column_name=str(column_name),
                stored_value=str(value),
                provenance=Provenance.RelationTable,
            )
        )
    return records


def cosine(v: EmbeddingVector, w: EmbeddingVector) -> float:
    """Cosine similarity; rejects dimension mismatches and zero vectors."""
    if v.dimension != w.dimension:
        raise ValueError(f"dimension mismatch: {v.dimension} != {w.dimension}")
    norm_v = float(np.linalg.norm(v.values))
    norm_w = float(np.linalg.norm(w.values))
    if norm_v == 0.0 or norm_w == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.dot(v.values, w.values) / (norm_v * norm_w))


def align(
    keyword: Keyword,
    entries: List[EncodingKnowledge],
    embedder: Embedder,
    min_similarity: Optional[float] = None,
) -> AlignmentResult:
    """Argmax-by-cosine over the given records; earliest entry wins ties."""
    if not entries:
        return AlignmentResult(keyword=keyword.surface, best=None, score=0.0)
    query_vector = embedder.embed(keyword.surface)
    best: Optional[EncodingKnowledge] = None
    best_score = -2.0
    for entry in entries:
        score = cosine(query_vector, embedder.embed(entry.embedding_text()))
        if score > best_score:
            best, best_score = entry, score
    if min_similarity is not None and best_score < min_similarity:
        return AlignmentResult(keyword=keyword.surface, best=None, score=best_score)
    return AlignmentResult(keyword=keyword.surface, best=best, score=best_score)
