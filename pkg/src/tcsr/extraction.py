"""Keyword extraction: prompt the LLM and parse keyword/table/column bindings.

The LLM answers in the line grammar ``keyword | kind | table | col1, col2``.
Parsing is repair-oriented: unknown columns are dropped (keyword kept while at
least one valid column remains), multi-table answers collapse to the first
table, and unknown tables drop the keyword with a warning. One reprompt is
attempted when the whole response is unparseable.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import ExtractionError
from .gateway import Adapters, CompletionRequest
from .schema_catalog import (
    ContentSamples,
    DatabaseSchema,
    render_foreign_keys,
    render_schema_prompt,
)
from .templates import TemplateId

log = logging.getLogger(__name__)

_REPROMPT_SUFFIX = "\n### answer strictly in the specified format"


class KeywordKind(str, enum.Enum):
    DataContent = "data_content"
    Schema = "schema"


_KIND_ALIASES = {
    "data_content": KeywordKind.DataContent,
    "datacontent": KeywordKind.DataContent,
    "data content": KeywordKind.DataContent,
    "dc": KeywordKind.DataContent,
    "schema": KeywordKind.Schema,
}


@dataclass(frozen=True)
class Keyword:
    surface: str
    kind: KeywordKind
    table: str
    candidate_columns: Tuple[str, ...]

    def validate(self, schema: DatabaseSchema) -> bool:
        if not self.surface or not self.candidate_columns:
            return False
        table = schema.table(self.table)
        if table is None or table.name != self.table:
            return False
        return all(schema.column(self.table, c) == c for c in self.candidate_columns)


@dataclass
class KeywordSet:
    question_id: str
    keywords: List[Keyword] = field(default_factory=list)

    def data_content(self) -> List[Keyword]:
        return [k for k in self.keywords if k.kind == KeywordKind.DataContent]

    def serialize(self) -> str:
        return "\n".join(
            f"{k.surface} | {k.kind.value} | {k.table} | {', '.join(k.candidate_columns)}"
            for k in self.keywords
        )


def parse_extraction(
    response: str, schema: DatabaseSchema, question_id: str = ""
) -> KeywordSet:
    """Parse the labeled line format against the schema.

    Identifier matching is case-insensitive and canonicalizes to schema
    casing. Raises ExtractionError for structurally malformed lines; schema
    repairs (bad columns/tables) only log.
    """
    result = KeywordSet(question_id=question_id)
    seen: set = set()
    for line_no, raw_line in enumerate(response.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue
        parts = [part.strip() for part in line.split("|")]
        if len(parts) != 4 or not parts[0]:
            raise ExtractionError(f"malformed extraction line {line_no}: {raw_line!r}", response)
        surface, kind_text, table_text, columns_text = parts
        kind = _KIND_ALIASES.get(kind_text.lower())
        if kind is None:
            raise ExtractionError(
                f"unknown keyword kind {kind_text!r} at line {line_no}", response
            )
        tables = [t.strip() for t in table_text.split(",") if t.strip()]
        if not tables:
            raise ExtractionError(f"missing table at line {line_no}", response)
        if len(tables) > 1:
            log.warning("keyword %r listed %d tables; keeping %r", surface, len(tables), tables[0])
        table = schema.table(tables[0])
        if table is None:
            log.warning("dropping keyword %r: unknown table %r", surface, tables[0])
            continue
        columns = []
        for column_text in columns_text.split(","):
            column_text = column_text.strip()
            if not column_text:
                continue
            canonical = schema.column(table.name, column_text)
            if canonical is None:
                log.warning(
                    "dropping column %r of keyword %r: not in table %r",
                    column_text, surface, table.name,
                )
                continue
            if canonical not in columns:
                columns.append(canonical)
        if not columns:
            log.warning("dropping keyword %r: no valid columns remain", surface)
            continue
        key = (surface, table.name)
        if key in seen:
            continue
        seen.add(key)
        result.keywords.append(
            Keyword(surface=surface, kind=kind, table=table.name, candidate_columns=tuple(columns))
        )
    return result


def extract_keywords(
    question: str,
    schema: DatabaseSchema,
    samples: Optional[Dict[str, ContentSamples]],
    adapters: Adapters,
    question_id: str = "",
    temperature: float = 0.0,
    max_tokens: int = 1024,
) -> KeywordSet:
    """One extraction call with a single strict-format reprompt on failure."""
    bindings = {
        "desc_str": render_schema_prompt(schema, samples),
        "fk_str": render_foreign_keys(schema),
        "query": question,
    }
    response = adapters.complete(
        CompletionRequest(TemplateId.KeywordExtraction, bindings, temperature, max_tokens)
    )
    try:
        return parse_extraction(response, schema, question_id)
    except ExtractionError as first_error:
        log.warning("extraction parse failed, reprompting: %s", first_error)
        retry_bindings = dict(bindings, query=question + _REPROMPT_SUFFIX)
        retry = adapters.complete(
            CompletionRequest(TemplateId.KeywordExtraction, retry_bindings, temperature, max_tokens)
        )
        try:
            return parse_extraction(retry, schema, question_id)
        except ExtractionError as exc:
            raise ExtractionError(
                f"extraction unparseable after reprompt: {exc}", retry
            ) from first_error
