"""Clause-set normalization: equivalences, inequivalences, and idempotence."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcsr.errors import ClauseParseError
from tcsr.sql_clauses import VALUE_TOKEN, has_top_level_order_by, parse_clauses


def equal(a: str, b: str) -> bool:
    return parse_clauses(a) == parse_clauses(b)


def test_alias_resolution_equivalence():
    assert equal(
        "SELECT T1.name FROM singer AS T1 WHERE T1.country = 'USA'",
        "SELECT name FROM singer WHERE country = 'USA'",
    )
    assert equal(
        "SELECT s.name FROM singer s",
        "SELECT singer.name FROM singer",
    )


def test_value_insensitivity():
    assert equal(
        "SELECT name FROM singer WHERE country = 'USA' AND age > 20",
        "SELECT name FROM singer WHERE country = 'France' AND age > 99",
    )
    clauses = parse_clauses("SELECT name FROM singer WHERE age = 42")
    assert (VALUE_TOKEN, "=", "age") in clauses.where_predicates


def test_predicate_order_insensitivity():
    assert equal(
        "SELECT a FROM t WHERE x = 1 AND y = 2",
        "SELECT a FROM t WHERE y = 2 AND x = 1",
    )


def test_equality_operand_symmetry():
    assert equal(
        "SELECT a FROM t WHERE x = y",
        "SELECT a FROM t WHERE y = x",
    )
    assert not equal(
        "SELECT a FROM t WHERE x < y",
        "SELECT a FROM t WHERE y < x",
    )


def test_join_condition_symmetry_and_alias():
    assert equal(
        "SELECT a.x FROM one AS a JOIN two AS b ON a.id = b.id",
        "SELECT one.x FROM one JOIN two ON two.id = one.id",
    )


def test_case_and_quoting_insensitivity():
    assert equal(
        'SELECT "Name" FROM Singer',
        "select name from singer",
    )


def test_meaningful_differences_detected():
    assert not equal("SELECT count(*) FROM singer", "SELECT count(name) FROM singer")
    assert not equal("SELECT name FROM singer", "SELECT DISTINCT name FROM singer")
    assert not equal("SELECT name FROM singer", "SELECT name FROM singer LIMIT 5")
    assert not equal("SELECT name FROM singer", "SELECT age FROM singer")
    assert not equal(
        "SELECT a FROM t ORDER BY a, b",
        "SELECT a FROM t ORDER BY b, a",          # ORDER BY is position-sensitive
    )
    assert not equal(
        "SELECT a FROM t",
        "SELECT a FROM t UNION SELECT a FROM u",
    )


def test_group_by_multiset_and_asc_dropped():
    assert equal(
        "SELECT a FROM t GROUP BY a, b ORDER BY a ASC",
        "SELECT a FROM t GROUP BY b, a ORDER BY a",
    )


def test_select_alias_dropped():
    assert equal(
        "SELECT count(*) AS n FROM t",
        "SELECT count(*) FROM t",
    )


def test_set_operation_with_all():
    clauses = parse_clauses("SELECT a FROM t UNION ALL SELECT a FROM u")
    assert clauses.set_op is not None
    op, right = clauses.set_op
    assert op == "union all"
    assert right.from_tables == ("u",)


def test_subquery_predicates_compare_by_canonical_form():
    assert equal(
        "SELECT a FROM t WHERE b IN (SELECT b FROM u WHERE c = 1)",
        "SELECT a FROM t WHERE b IN (SELECT b FROM u WHERE c = 2)",
    )
    assert not equal(
        "SELECT a FROM t WHERE b IN (SELECT b FROM u)",
        "SELECT a FROM t WHERE b IN (SELECT d FROM u)",
    )


def test_unsupported_constructs_named_in_errors():
    with pytest.raises(ClauseParseError, match="WITH"):
        parse_clauses("WITH x AS (SELECT 1) SELECT * FROM x")
    with pytest.raises(ClauseParseError, match="derived table"):
        parse_clauses("SELECT a FROM (SELECT a FROM t)")
    with pytest.raises(ClauseParseError, match="duplicate"):
        parse_clauses("SELECT a FROM t WHERE x = 1 WHERE y = 2")
    with pytest.raises(ClauseParseError):
        parse_clauses("")
    with pytest.raises(ClauseParseError):
        parse_clauses("DELETE FROM t")


def test_has_top_level_order_by():
    assert has_top_level_order_by("SELECT a FROM t ORDER BY a")
    assert not has_top_level_order_by("SELECT a FROM t")
    assert not has_top_level_order_by(
        "SELECT a FROM t WHERE b IN (SELECT b FROM u ORDER BY b)"
    )
    assert not has_top_level_order_by("not sql at @@ all ~")


_COLUMNS = st.sampled_from(["a", "b", "c"])
_TABLES = st.sampled_from(["t", "u"])


@st.composite
def _statements(draw):
    column = draw(_COLUMNS)
    table = draw(_TABLES)
    sql = f"SELECT {column} FROM {table}"
    if draw(st.booleans()):
        sql += f" WHERE {draw(_COLUMNS)} = {draw(st.integers(0, 9))}"
        if draw(st.booleans()):
            sql += f" AND {draw(_COLUMNS)} > {draw(st.integers(0, 9))}"
    if draw(st.booleans()):
        sql += f" GROUP BY {draw(_COLUMNS)}"
        if draw(st.booleans()):
            sql += f" HAVING count(*) > {draw(st.integers(0, 9))}"
    if draw(st.booleans()):
        sql += f" ORDER BY {draw(_COLUMNS)} DESC"
    if draw(st.booleans()):
        sql += " LIMIT 3"
    if draw(st.booleans()):
        sql += f" UNION SELECT {draw(_COLUMNS)} FROM {draw(_TABLES)}"
    return sql


@settings(max_examples=150, deadline=None)
@given(_statements())
def test_canonical_rendering_is_idempotent(sql):
    clauses = parse_clauses(sql)
    assert parse_clauses(clauses.canonical()) == clauses


def test_canonical_idempotence_on_rich_examples():
    examples = [
        "SELECT DISTINCT s.name, count(*) FROM singer AS s JOIN concert AS c "
        "ON s.id = c.singer_id WHERE s.country = 'USA' GROUP BY s.name "
        "HAVING count(*) > 1 ORDER BY count(*) DESC LIMIT 3",
        "SELECT a FROM t WHERE b IN (SELECT b FROM u WHERE c = 1)",
        "SELECT a FROM t UNION ALL SELECT a FROM u",
        "SELECT make FROM cars_data WHERE horsepower > 200 "
        "INTERSECT SELECT make FROM cars_data WHERE model = 'Model 3'",
    ]
    for sql in examples:
        clauses = parse_clauses(sql)
        assert parse_clauses(clauses.canonical()) == clauses
