"""Generation-execution-revision orchestration for one question.

Order of operations: extract keywords, fuzz-probe the database, mine/align
encoding knowledge, draft the fuzzy SQL, apply the aligned knowledge with one
revision call (so the first executed statement already incorporates it), then
loop execute -> revise on error or empty result until rows come back or the
revision cap is reached.
"""

from __future__ import annotations

import logging
import re
import sqlite3
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .config import RunConfig
from .errors import GenerationError, TcsrError
from .extraction import extract_keywords
from .fuzzer import fuzzy_detect
from .gateway import Adapters, CompletionRequest
from .knowledge import (
    ClassificationLabel,
    EncodingKnowledge,
    KnowledgeTable,
    align,
    classify,
    normalize,
)
from .schema_catalog import (
    introspect,
    render_foreign_keys,
    render_schema_prompt,
    sample_all_tables,
)
from .templates import TemplateId

log = logging.getLogger(__name__)

EMPTY_RESULT_FEEDBACK = "query returned an empty result"
KNOWLEDGE_APPLY_FEEDBACK = "no execution yet; apply encoding knowledge"

STATUS_ROWS = "rows_returned"
STATUS_EMPTY = "empty_result"
STATUS_ERROR = "execution_error"

_WRITE_PREFIXES = (
    "insert", "update", "delete", "drop", "create", "alter", "replace",
    "attach", "detach", "pragma", "vacuum", "reindex", "begin", "commit",
)


@dataclass
class ExecutionOutcome:
    status: str
    rows: Optional[List[tuple]] = None
    error_message: Optional[str] = None
    error_class: Optional[str] = None
    elapsed: float = 0.0


@dataclass
class PipelineResult:
    question_id: str
    fuzzy_sql: str = ""
    revisions: List[Tuple[str, ExecutionOutcome]] = field(default_factory=list)
    precise_sql: Optional[str] = None
    knowledge_used: List[EncodingKnowledge] = field(default_factory=list)
    gave_up: bool = True
    failure: Optional[str] = None
    trace: dict = field(default_factory=dict)


def extract_sql(reply: str) -> str:
    """Recover a single statement from an LLM reply.

    Strips code fences and leading prose, keeps only the first statement, and
    prepends SELECT when the generation template already primed it.
    """
    text = reply.strip()
    fence = re.search(r"```(?:sql|sqlite)?\s*(.*?)```", text, re.DOTALL | re.IGNORECASE)
    if fence:
        text = fence.group(1).strip()
    if not text:
        raise GenerationError("no SQL statement in reply")
    match = re.search(r"\b(select|with)\b", text, re.IGNORECASE)
    if match:
        text = text[match.start():]
    else:
        text = "SELECT " + text
    text = text.split(";")[0].strip()
    if not text:
        raise GenerationError("no SQL statement in reply")
    return text


def render_related_prompt(knowledge: List[EncodingKnowledge]) -> str:
    if not knowledge:
        return "none"
    return "\n".join(
        f"# keyword '{k.keyword}' is stored as '{k.stored_value}' "
        f"in {k.table_name}.{k.column_name}"
        for k in knowledge
    )


def _complete_sql(
    adapters: Adapters,
    template_id: TemplateId,
    bindings: dict,
    temperature: float,
    max_tokens: int,
) -> str:
    """Request SQL, with one strict-format reprompt when no statement parses."""
    reply = adapters.complete(CompletionRequest(template_id, bindings, temperature, max_tokens))
    try:
        return extract_sql(reply)
    except GenerationError:
        retry_bindings = dict(
            bindings, query=bindings["query"] + "\n### answer with a single SQL statement"
        )
        retry = adapters.complete(
            CompletionRequest(template_id, retry_bindings, temperature, max_tokens)
        )
        return extract_sql(retry)


def generate_fuzzy_sql(
    question: str,
    desc_str: str,
    fk_str: str,
    knowledge: List[EncodingKnowledge],
    adapters: Adapters,
    temperature: float = 0.0,
    max_tokens: int = 1024,
) -> str:
    bindings = {
        "desc_str": desc_str,
        "fk_str": fk_str,
        "query": question,
        "related_prompt": render_related_prompt(knowledge),
    }
    return _complete_sql(adapters, TemplateId.SqlGeneration, bindings, temperature, max_tokens)


def execute_and_judge(
    conn: sqlite3.Connection, sql: str, max_rows: int = 500, timeout: float = 2.0
) -> ExecutionOutcome:
    """Execute one read statement and bucket the outcome."""
    first_token = sql.lstrip("( \n\t").split(None, 1)
    if not first_token or first_token[0].lower() in _WRITE_PREFIXES:
        return ExecutionOutcome(
            status=STATUS_ERROR,
            error_message="only single SELECT statements are executed",
            error_class="RejectedStatement",
        )
    start = time.monotonic()
    deadline = start + timeout
    conn.set_progress_handler(lambda: 1 if time.monotonic() > deadline else 0, 10_000)
    try:
        rows = conn.execute(sql).fetchmany(max_rows)
    except sqlite3.Error as exc:
        return ExecutionOutcome(
            status=STATUS_ERROR,
            error_message=str(exc),
            error_class=type(exc).__name__,
            elapsed=time.monotonic() - start,
        )
    finally:
        conn.set_progress_handler(None, 0)
    elapsed = time.monotonic() - start
    if not rows:
        return ExecutionOutcome(status=STATUS_EMPTY, elapsed=elapsed)
    return ExecutionOutcome(status=STATUS_ROWS, rows=[tuple(r) for r in rows], elapsed=elapsed)


def revise(
    question: str,
    knowledge: List[EncodingKnowledge],
    desc_str: str,
    fk_str: str,
    old_sql: str,
    outcome: Optional[ExecutionOutcome],
    adapters: Adapters,
    temperature: float = 0.0,
    max_tokens: int = 1024,
) -> str:
    """One revision call; ``outcome=None`` is the pre-execution knowledge pass."""
    if outcome is None:
        error_text, error_class = KNOWLEDGE_APPLY_FEEDBACK, "PendingExecution"
    elif outcome.status == STATUS_EMPTY:
        error_text, error_class = EMPTY_RESULT_FEEDBACK, "EmptyResult"
    elif outcome.status == STATUS_ERROR:
        error_text = outcome.error_message or "execution error"
        error_class = outcome.error_class or "Error"
    else:
        raise ValueError("revise requires a failed or pending outcome")
    bindings = {
        "query": question,
        "related_prompt": render_related_prompt(knowledge),
        "desc_str": desc_str,
        "fk_str": fk_str,
        "old_sql": old_sql,
        "sqlite_error": error_text,
        "exception_class": error_class,
    }
    return _complete_sql(adapters, TemplateId.SqlRevision, bindings, temperature, max_tokens)


def run_pipeline(
    question: str,
    conn: sqlite3.Connection,
    knowledge_table: KnowledgeTable,
    adapters: Adapters,
    config: RunConfig,
    question_id: str = "q0",
    database_name: str = "main",
) -> PipelineResult:
    """Full per-question flow; adapter hard failures yield a diagnostic result."""
    result = PipelineResult(question_id=question_id)
    temperature = config.llm.temperature
    max_tokens = config.llm.max_tokens
    try:
        schema = introspect(conn, database_name)
        samples = sample_all_tables(conn, schema, config.content_samples, config.seed)
        desc_str = render_schema_prompt(schema, samples)
        fk_str = render_foreign_keys(schema)

        keywords = extract_keywords(
            question, schema, samples, adapters, question_id, temperature, max_tokens
        )
        search_results = fuzzy_detect(
            keywords, conn, adapters,
            max_synonyms=config.max_synonyms,
            row_limit=config.row_limit,
            timeout=config.statement_timeout,
        )
        mined = 0
        by_surface: dict = {}
        for keyword in keywords.data_content():
            by_surface[keyword.surface] = keyword
        for search_result in search_results:
            if classify(search_result).label == ClassificationLabel.UniqueValue:
                keyword = by_surface[search_result.seed.keyword_surface]
                if knowledge_table.upsert(normalize(keyword, database_name, search_result)):
                    mined += 1

        chosen: List[EncodingKnowledge] = []
        local_entries = knowledge_table.for_database(database_name)
        alignments = []
        for keyword in keywords.data_content():
            alignment = align(keyword, local_entries, adapters.embedder, config.min_similarity)
            alignments.append(alignment)
            if alignment.best is not None and alignment.best not in chosen:
                chosen.append(alignment.best)
        result.knowledge_used = chosen

        result.fuzzy_sql = generate_fuzzy_sql(
            question, desc_str, fk_str, chosen, adapters, temperature, max_tokens
        )
        sql = result.fuzzy_sql
        if chosen:
            sql = revise(
                question, chosen, desc_str, fk_str, sql, None, adapters, temperature, max_tokens
            )

        for _ in range(1 + config.max_revisions):
            outcome = execute_and_judge(conn, sql, config.max_rows, config.statement_timeout)
            result.revisions.append((sql, outcome))
            accepted = outcome.status == STATUS_ROWS or (
                config.accept_empty and outcome.status == STATUS_EMPTY
            )
            if accepted:
                result.precise_sql = sql
                result.gave_up = False
                break
            if len(result.revisions) > config.max_revisions:
                break
            sql = revise(
                question, chosen, desc_str, fk_str, sql, outcome, adapters, temperature, max_tokens
            )

        result.trace = {
            "question": question,
            "question_id": question_id,
            "keywords": keywords.serialize(),
            "search_results": [
                {
                    "sql": r.seed.sql_text,
                    "values": r.distinct_values,
                    "truncated": r.truncated,
                    "error": r.error,
                }
                for r in search_results
            ],
            "mined_entries": mined,
            "alignments": [
                {"keyword": a.keyword, "score": a.score,
                 "entry": a.best.to_json() if a.best else None}
                for a in alignments
            ],
            "llm_calls": list(adapters.trace),
            "attempts": [
                {"sql": sql_text, "status": outcome.status, "error": outcome.error_message}
                for sql_text, outcome in result.revisions
            ],
            "timestamps": {"finished_at": time.time()},
        }
    except TcsrError as exc:
        result.gave_up = True
        result.failure = str(exc)
        result.trace = {
            "question": question,
            "question_id": question_id,
            "failure": str(exc),
            "llm_calls": list(adapters.trace),
            "timestamps": {"finished_at": time.time()},
        }
        log.error("pipeline aborted for %s: %s", question_id, exc)
    return result
