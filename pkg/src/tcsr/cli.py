"""Command-line entry point: ask, bench, knowledge, introspect."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import RunConfig, load_config
from .errors import ConfigError, TcsrError
from .evaluator import run_benchmark
from .gateway import build_adapters
from .knowledge import KnowledgeTable, import_relation_knowledge
from .pipeline import run_pipeline
from .schema_catalog import introspect, open_read_only, render_foreign_keys, render_schema_prompt

EXIT_OK = 0
EXIT_GAVE_UP = 1
EXIT_USAGE = 2


def _config_options(function):
    options = [
        click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file."),
        click.option("--mock-script", type=click.Path(), default=None, help="Scripted mock LLM JSON file."),
        click.option("--endpoint", default=None, help="OpenAI-compatible chat endpoint."),
        click.option("--model", default=None, help="Chat model name."),
        click.option("--temperature", type=float, default=None),
        click.option("--max-tokens", type=int, default=None),
        click.option("--content-samples", type=int, default=None),
        click.option("--max-synonyms", type=int, default=None),
        click.option("--row-limit", type=int, default=None),
        click.option("--max-revisions", type=int, default=None),
        click.option("--workers", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--knowledge-path", type=click.Path(), default=None),
        click.option("--accept-empty", is_flag=True, default=None),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def _build_config(config_path, **flags) -> RunConfig:
    overrides = {
        "llm.mock_script": flags.get("mock_script"),
        "llm.endpoint": flags.get("endpoint"),
        "llm.model": flags.get("model"),
        "llm.temperature": flags.get("temperature"),
        "llm.max_tokens": flags.get("max_tokens"),
        "content_samples": flags.get("content_samples"),
        "max_synonyms": flags.get("max_synonyms"),
        "row_limit": flags.get("row_limit"),
        "max_revisions": flags.get("max_revisions"),
        "workers": flags.get("workers"),
        "seed": flags.get("seed"),
        "knowledge_path": flags.get("knowledge_path"),
        "accept_empty": flags.get("accept_empty"),
    }
    return load_config(config_path, overrides)


@click.group()
def main():
    """Table-content-aware text-to-SQL with self-retrieval."""


@main.command("ask")
@click.argument("question")
@click.argument("db_path", type=click.Path())
@_config_options
def cmd_ask(question, db_path, config_path, **flags):
    """Answer one natural-language QUESTION against the SQLite file DB_PATH."""
    try:
        config = _build_config(config_path, **flags)
        adapters = build_adapters(config)
        conn = open_read_only(db_path)
    except TcsrError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)

    knowledge_table = (
        KnowledgeTable.load(config.knowledge_path) if config.knowledge_path else KnowledgeTable()
    )
    database_name = Path(db_path).stem
    result = run_pipeline(
        question, conn, knowledge_table, adapters, config, database_name=database_name
    )
    conn.close()
    if config.knowledge_path:
        knowledge_table.save(config.knowledge_path)

    click.echo(f"Fuzzy SQL:   {result.fuzzy_sql or '(none)'}")
    for index, (sql, outcome) in enumerate(result.revisions, start=1):
        click.echo(f"Attempt {index}:   {sql}")
        click.echo(f"  -> {outcome.status}" + (f": {outcome.error_message}" if outcome.error_message else ""))
    if result.precise_sql:
        click.echo(f"Precise SQL: {result.precise_sql}")
        last_outcome = result.revisions[-1][1]
        for row in last_outcome.rows or []:
            click.echo("  " + " | ".join(str(cell) for cell in row))
        sys.exit(EXIT_OK)
    click.echo(f"gave up: {result.failure or 'no accepted execution within the revision cap'}")
    sys.exit(EXIT_GAVE_UP)


@main.command("bench")
@click.argument("dataset", type=click.Path())
@click.argument("db_root", type=click.Path())
@click.option("--out-dir", type=click.Path(), required=True)
@_config_options
def cmd_bench(dataset, db_root, out_dir, config_path, **flags):
    """Run the pipeline over a Spider-format DATASET and score EX/EM."""
    try:
        config = _build_config(config_path, **flags)
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        probe = out_path / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except (TcsrError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        report = run_benchmark(dataset, db_root, config, out_dir)
    except TcsrError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    ex_count = sum(s.ex for s in report.per_example)
    em_count = sum(s.em for s in report.per_example)
    click.echo(
        f"EX {ex_count}/{report.n} ({report.ex_accuracy:.1%})  "
        f"EM {em_count}/{report.n} ({report.em_accuracy:.1%})"
    )
    sys.exit(EXIT_OK)


@main.group("knowledge")
def cmd_knowledge():
    """Manage the encoding-knowledge file."""


@cmd_knowledge.command("import")
@click.argument("db_path", type=click.Path())
@click.option("--knowledge-path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Config file with a relation_mapping section.")
@click.option("--mapping-table", default=None)
@click.option("--keyword-column", default=None)
@click.option("--target-table", default=None)
@click.option("--target-column", default=None, help="Literal target column, or a mapping-table column holding names.")
@click.option("--value-column", default=None)
def knowledge_import(db_path, knowledge_path, config_path, mapping_table,
                     keyword_column, target_table, target_column, value_column):
    """Import relationship-matching knowledge from a source database."""
    try:
        config = load_config(config_path, {
            "relation_mapping.table": mapping_table,
            "relation_mapping.keyword_column": keyword_column,
            "relation_mapping.target_table": target_table,
            "relation_mapping.target_column_name_or_column": target_column,
            "relation_mapping.target_value_column": value_column,
        })
        if not config.relation_mapping.is_set():
            raise ConfigError("no relation mapping given (flags or config section)")
        conn = open_read_only(db_path)
        records = import_relation_knowledge(
            conn, config.relation_mapping, Path(db_path).stem
        )
        conn.close()
    except TcsrError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    table = KnowledgeTable.load(knowledge_path)
    added = sum(table.upsert(record) for record in records)
    table.save(knowledge_path)
    click.echo(f"imported {added} new entries ({len(records)} rows read, {len(table)} total)")


@cmd_knowledge.command("list")
@click.option("--knowledge-path", type=click.Path(), required=True)
def knowledge_list(knowledge_path):
    table = KnowledgeTable.load(knowledge_path)
    for entry in table.entries:
        click.echo(
            f"[{entry.provenance.value}] {entry.keyword!r} -> "
            f"{entry.database_name}.{entry.table_name}.{entry.column_name} = {entry.stored_value!r}"
        )
    click.echo(f"{len(table)} entries")


@cmd_knowledge.command("clear")
@click.option("--knowledge-path", type=click.Path(), required=True)
@click.option("--yes", is_flag=True, default=False)
def knowledge_clear(knowledge_path, yes):
    if not yes:
        click.echo("refusing to clear without --yes", err=True)
        sys.exit(EXIT_USAGE)
    KnowledgeTable().save(knowledge_path)
    click.echo("knowledge file cleared")


@main.command("introspect")
@click.argument("db_path", type=click.Path())
@click.option("--samples", "sample_count", type=int, default=0, help="Sample rows per table.")
@click.option("--seed", type=int, default=0)
@click.option("--as-json", is_flag=True, default=False)
def cmd_introspect(db_path, sample_count, seed, as_json):
    """Print the schema (and optional content samples) of a SQLite file."""
    try:
        conn = open_read_only(db_path)
        schema = introspect(conn, Path(db_path).stem)
    except TcsrError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if as_json:
        payload = {
            "database": schema.database_name,
            "tables": [
                {
                    "name": t.name,
                    "columns": [{"name": n, "type": d} for n, d in t.columns],
                    "foreign_keys": [
                        [f.local_column, f.referenced_table, f.referenced_column]
                        for f in t.foreign_keys
                    ],
                }
                for t in schema.tables
            ],
        }
        click.echo(json.dumps(payload, indent=2))
    else:
        samples = None
        if sample_count:
            from .schema_catalog import sample_all_tables

            samples = sample_all_tables(conn, schema, sample_count, seed)
        click.echo(render_schema_prompt(schema, samples))
        click.echo("### Foreign keys:")
        click.echo(render_foreign_keys(schema))
    conn.close()
