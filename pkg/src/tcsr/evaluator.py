"""Benchmark loading and scoring: execution accuracy and exact-set match.

Datasets are Spider-style JSON arrays of ``{question, db_id, query}`` with
databases under ``<root>/<db_id>/<db_id>.sqlite``. EX compares execution
results (ordered only when the gold query has a top-level ORDER BY, multiset
otherwise); EM compares normalized clause sets and ignores literal values.
"""

from __future__ import annotations

import json
import logging
import sqlite3
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .config import RunConfig
from .errors import ClauseParseError, ConfigError, DatabaseError
from .gateway import build_adapters
from .knowledge import KnowledgeTable
from .pipeline import PipelineResult, run_pipeline
from .schema_catalog import open_read_only
from .sql_clauses import has_top_level_order_by, parse_clauses

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchmarkExample:
    id: str
    question: str
    database_id: str
    gold_sql: str


@dataclass
class ExampleScore:
    id: str
    ex: bool
    em: bool
    precise_sql: Optional[str]
    gave_up: bool
    attempts: int = 0


@dataclass
class Report:
    n: int
    ex_accuracy: float
    em_accuracy: float
    per_example: List[ExampleScore] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "ex_accuracy": self.ex_accuracy,
            "em_accuracy": self.em_accuracy,
            "per_example": [
                {
                    "id": s.id,
                    "ex": s.ex,
                    "em": s.em,
                    "precise_sql": s.precise_sql,
                    "gave_up": s.gave_up,
                    "attempts": s.attempts,
                }
                for s in self.per_example
            ],
        }


def load_dataset(path: str | Path) -> List[BenchmarkExample]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise ConfigError("no examples in dataset")
    examples = []
    for index, record in enumerate(raw):
        examples.append(
            BenchmarkExample(
                id=str(record.get("id", index)),
                question=record["question"],
                database_id=record["db_id"],
                gold_sql=record["query"],
            )
        )
    return examples


def database_path(databases_root: str | Path, database_id: str) -> Path:
    return Path(databases_root) / database_id / f"{database_id}.sqlite"


def _normalize_cell(cell: object) -> object:
    if isinstance(cell, float) and cell.is_integer():
        return int(cell)
    return cell


def _execute_rows(conn: sqlite3.Connection, sql: str) -> List[tuple]:
    rows = conn.execute(sql).fetchall()
    return [tuple(_normalize_cell(c) for c in row) for row in rows]


def execution_accuracy(pred_sql: str, gold_sql: str, conn: sqlite3.Connection) -> bool:
    """True iff both queries execute and produce matching results."""
    gold_rows = _execute_rows(conn, gold_sql)
    try:
        pred_rows = _execute_rows(conn, pred_sql)
    except sqlite3.Error:
        return False
    if has_top_level_order_by(gold_sql):
        return pred_rows == gold_rows
    return sorted(map(repr, pred_rows)) == sorted(map(repr, gold_rows))


def exact_set_match(pred_sql: str, gold_sql: str) -> bool:
    """True iff both parse and every normalized clause set is equal."""
    try:
        return parse_clauses(pred_sql) == parse_clauses(gold_sql)
    except ClauseParseError:
        return False


def score_example(
    example: BenchmarkExample, result: PipelineResult, conn: sqlite3.Connection
) -> ExampleScore:
    predicted = result.precise_sql
    ex = bool(predicted) and execution_accuracy(predicted, example.gold_sql, conn)
    em = bool(predicted) and exact_set_match(predicted, example.gold_sql)
    return ExampleScore(
        id=example.id,
        ex=ex,
        em=em,
        precise_sql=predicted,
        gave_up=result.gave_up,
        attempts=len(result.revisions),
    )


def run_benchmark(
    dataset_path: str | Path,
    databases_root: str | Path,
    config: RunConfig,
    out_dir: str | Path,
) -> Report:
    """Run the pipeline over a dataset, score it, and write all outputs.

    Outputs under ``out_dir``: report.json, per_example.csv, figures/, and
    traces/<id>.json. Resolution failures are reported before any LLM call.
    """
    from . import reporting  # local import: keeps matplotlib out of scoring paths

    examples = load_dataset(dataset_path)
    missing = [
        str(database_path(databases_root, e.database_id))
        for e in examples
        if not database_path(databases_root, e.database_id).is_file()
    ]
    if missing:
        raise DatabaseError("missing database files: " + ", ".join(sorted(set(missing))))

    out_dir = Path(out_dir)
    traces_dir = out_dir / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)

    knowledge_path = config.knowledge_path or str(out_dir / "knowledge.jsonl")
    knowledge_table = KnowledgeTable.load(knowledge_path)

    def run_one(example: BenchmarkExample) -> PipelineResult:
        adapters = build_adapters(config)
        conn = open_read_only(database_path(databases_root, example.database_id))
        try:
            return run_pipeline(
                example.question,
                conn,
                knowledge_table,
                adapters,
                config,
                question_id=example.id,
                database_name=example.database_id,
            )
        finally:
            conn.close()

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_one, examples))
    else:
        results = [run_one(example) for example in examples]

    scores = []
    for example, result in zip(examples, results):
        conn = open_read_only(database_path(databases_root, example.database_id))
        try:
            scores.append(score_example(example, result, conn))
        finally:
            conn.close()
        (traces_dir / f"{example.id}.json").write_text(
            json.dumps(result.trace, indent=2, ensure_ascii=False, default=str),
            encoding="utf-8",
        )

    n = len(scores)
    report = Report(
        n=n,
        ex_accuracy=sum(s.ex for s in scores) / n,
        em_accuracy=sum(s.em for s in scores) / n,
        per_example=scores,
    )

    knowledge_table.save(knowledge_path)
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    reporting.write_per_example_csv(report, out_dir / "per_example.csv")
    reporting.render_figures(report, out_dir / "figures")
    return report
