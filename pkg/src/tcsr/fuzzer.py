"""Seed-SQL fuzzing: mutate (column, value, skeleton) probes and execute them.

Each data-content keyword gets a seed pool of candidate columns, probe values
(the keyword surface plus LLM-suggested synonyms), and the two probe skeletons
(exact equality and substring LIKE). The full cartesian product is enumerated
deterministically, executed read-only with a row limit and statement timeout,
and distinct stored values are collected per probe.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import sqlite3
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .extraction import Keyword, KeywordKind, KeywordSet
from .gateway import Adapters, CompletionRequest
from .schema_catalog import distinct_column_values
from .templates import TemplateId

log = logging.getLogger(__name__)

LIKE_ESCAPE = "\\"


class SkeletonId(str, enum.Enum):
    ExactMatch = "exact_match"
    LikeMatch = "like_match"


SKELETONS = (SkeletonId.ExactMatch, SkeletonId.LikeMatch)


@dataclass(frozen=True)
class SeedSql:
    keyword_surface: str
    table: str
    column: str
    probe_value: str
    skeleton: SkeletonId
    sql_text: str


@dataclass
class SeedPool:
    keyword: Keyword
    columns: List[str]
    values: List[str]
    skeletons: Sequence[SkeletonId] = SKELETONS

    def __post_init__(self):
        if not self.columns:
            raise ValueError("seed pool needs at least one column")
        if not self.values:
            raise ValueError("seed pool needs at least one value")
        lowered = [v.lower() for v in self.values]
        if len(set(lowered)) != len(lowered):
            raise ValueError("seed pool values must be case-insensitively distinct")
        if self.keyword.surface not in self.values:
            raise ValueError("keyword surface must be among the probe values")


@dataclass
class SearchResult:
    seed: SeedSql
    distinct_values: List[str] = field(default_factory=list)
    truncated: bool = False
    row_limit: int = 20
    error: Optional[str] = None


def _quote_value(value: str) -> str:
    return value.replace("'", "''")


def _escape_like(value: str) -> str:
    value = value.replace(LIKE_ESCAPE, LIKE_ESCAPE + LIKE_ESCAPE)
    value = value.replace("%", LIKE_ESCAPE + "%")
    return value.replace("_", LIKE_ESCAPE + "_")


def render_seed(skeleton: SkeletonId, table: str, column: str, value: str) -> str:
    """Render one probe statement with quoted identifiers and escaped value."""
    if skeleton == SkeletonId.ExactMatch:
        return (
            f'SELECT DISTINCT "{column}" FROM "{table}" '
            f"WHERE \"{column}\" = '{_quote_value(value)}'"
        )
    escaped = _quote_value(_escape_like(value))
    return (
        f'SELECT DISTINCT "{column}" FROM "{table}" '
        f"WHERE \"{column}\" LIKE '%{escaped}%' ESCAPE '{LIKE_ESCAPE}'"
    )


def enumerate_seed_sql(pool: SeedPool) -> List[SeedSql]:
    """Full column x value x skeleton product, deduplicated on SQL text."""
    seeds: List[SeedSql] = []
    seen: set = set()
    for column in pool.columns:
        for value in pool.values:
            for skeleton in pool.skeletons:
                sql_text = render_seed(skeleton, pool.keyword.table, column, value)
                if sql_text in seen:
                    continue
                seen.add(sql_text)
                seeds.append(
                    SeedSql(
                        keyword_surface=pool.keyword.surface,
                        table=pool.keyword.table,
                        column=column,
                        probe_value=value,
                        skeleton=skeleton,
                        sql_text=sql_text,
                    )
                )
    return seeds


def _parse_synonym_list(reply: str) -> List[str]:
    reply = reply.strip()
    match = re.search(r"\[.*\]", reply, re.DOTALL)
    if match:
        try:
            parsed = json.loads(match.group(0))
            if isinstance(parsed, list):
                return [str(item) for item in parsed]
        except json.JSONDecodeError:
            pass
    # Fall back to one candidate per line / comma-separated.
    items: List[str] = []
    for line in reply.splitlines():
        for part in line.split(","):
            part = part.strip().strip("'\"#-• ")
            if part:
                items.append(part)
    return items


def propose_synonyms(
    keyword: Keyword,
    column_samples: List[str],
    adapters: Adapters,
    max_synonyms: int = 5,
    temperature: float = 0.0,
    max_tokens: int = 256,
) -> List[str]:
    """LLM-suggested storage-value candidates; degrades to [] on any failure."""
    if keyword.kind != KeywordKind.DataContent:
        raise ValueError("synonyms are only proposed for data-content keywords")
    bindings = {
        "keyword": keyword.surface,
        "column": keyword.candidate_columns[0],
        "datasamples": json.dumps(column_samples),
    }
    try:
        reply = adapters.complete(
            CompletionRequest(TemplateId.FuzzyDetection, bindings, temperature, max_tokens)
        )
    except Exception as exc:
        log.warning("synonym proposal failed for %r: %s", keyword.surface, exc)
        return []
    synonyms: List[str] = []
    seen = set()
    for candidate in _parse_synonym_list(reply):
        candidate = candidate.strip()
        if not candidate or candidate.lower() in seen:
            continue
        seen.add(candidate.lower())
        synonyms.append(candidate)
        if len(synonyms) >= max_synonyms:
            break
    return synonyms


def build_seed_pool(keyword: Keyword, synonyms: List[str], max_synonyms: int = 5) -> SeedPool:
    """Probe values are the keyword surface plus capped, deduplicated synonyms."""
    values = [keyword.surface]
    seen = {keyword.surface.lower()}
    for synonym in synonyms:
        if synonym.lower() in seen:
            continue
        seen.add(synonym.lower())
        values.append(synonym)
        if len(values) >= 1 + max_synonyms:
            break
    return SeedPool(keyword=keyword, columns=list(keyword.candidate_columns), values=values)


def execute_seed(
    conn: sqlite3.Connection,
    seed: SeedSql,
    row_limit: int = 20,
    timeout: float = 2.0,
) -> SearchResult:
    """Run one probe; SQL errors become an empty result with an error note."""
    result = SearchResult(seed=seed, row_limit=row_limit)
    deadline = time.monotonic() + timeout
    conn.set_progress_handler(lambda: 1 if time.monotonic() > deadline else 0, 10_000)
    try:
        cursor = conn.execute(seed.sql_text)
        rows = cursor.fetchmany(row_limit + 1)
    except sqlite3.Error as exc:
        result.error = str(exc)
        return result
    finally:
        conn.set_progress_handler(None, 0)
    if len(rows) > row_limit:
        result.truncated = True
        rows = rows[:row_limit]
    result.distinct_values = [
        "NULL" if row[0] is None else str(row[0]) for row in rows
    ]
    return result


def fuzzy_detect(
    keywords: KeywordSet,
    conn: sqlite3.Connection,
    adapters: Adapters,
    max_synonyms: int = 5,
    row_limit: int = 20,
    timeout: float = 2.0,
) -> List[SearchResult]:
    """Probe every data-content keyword's seed pool; never aborts the batch."""
    results: List[SearchResult] = []
    for keyword in keywords.data_content():
        column_samples = distinct_column_values(
            conn, keyword.table, keyword.candidate_columns[0]
        )
        synonyms = propose_synonyms(keyword, column_samples, adapters, max_synonyms)
        pool = build_seed_pool(keyword, synonyms, max_synonyms)
        for seed in enumerate_seed_sql(pool):
            results.append(execute_seed(conn, seed, row_limit, timeout))
    return results
