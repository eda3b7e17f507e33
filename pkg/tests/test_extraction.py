"""Keyword extraction parsing, repair, and the single reprompt."""

import pytest

from tcsr.errors import ExtractionError
from tcsr.extraction import (
    KeywordKind,
    _REPROMPT_SUFFIX,
    extract_keywords,
    parse_extraction,
)
from tcsr.gateway import Adapters, MockChatModel, MockEmbedder, script_entry
from tcsr.schema_catalog import introspect, open_read_only, sample_all_tables
from tcsr.templates import TemplateId


@pytest.fixture(scope="module")
def concerts_schema(concerts_db):
    conn = open_read_only(concerts_db)
    schema = introspect(conn, "concerts")
    conn.close()
    return schema


def test_parse_valid_lines_canonicalize_identifiers(concerts_schema):
    response = (
        "the United States | data_content | SINGER | Country\n"
        "\n"
        "age | schema | singer | age, AGE\n"
    )
    result = parse_extraction(response, concerts_schema, "q")
    assert len(result.keywords) == 2
    first, second = result.keywords
    assert first.surface == "the United States"
    assert first.kind == KeywordKind.DataContent
    assert first.table == "singer"
    assert first.candidate_columns == ("country",)
    assert second.kind == KeywordKind.Schema
    assert second.candidate_columns == ("age",)          # case-insensitive dedup
    assert result.data_content() == [first]


def test_parse_kind_aliases(concerts_schema):
    result = parse_extraction("x | DC | singer | name", concerts_schema)
    assert result.keywords[0].kind == KeywordKind.DataContent


def test_parse_malformed_line_reports_line_number(concerts_schema):
    with pytest.raises(ExtractionError) as excinfo:
        parse_extraction("good | schema | singer | name\nbad line", concerts_schema)
    assert "line 2" in str(excinfo.value)
    assert excinfo.value.raw_response.endswith("bad line")


def test_parse_unknown_kind_rejected(concerts_schema):
    with pytest.raises(ExtractionError):
        parse_extraction("x | nonsense | singer | name", concerts_schema)


def test_parse_repairs_unknown_identifiers(concerts_schema, caplog):
    response = (
        "dropped | data_content | no_such_table | name\n"
        "partially ok | data_content | singer | bogus, country\n"
        "all bad | data_content | singer | bogus\n"
    )
    with caplog.at_level("WARNING"):
        result = parse_extraction(response, concerts_schema)
    assert [k.surface for k in result.keywords] == ["partially ok"]
    assert result.keywords[0].candidate_columns == ("country",)


def test_parse_multi_table_keeps_first(concerts_schema):
    result = parse_extraction("x | schema | singer, other | name", concerts_schema)
    assert result.keywords[0].table == "singer"


def test_parse_dedups_surface_table_pairs(concerts_schema):
    response = "x | schema | singer | name\nx | data_content | singer | country"
    result = parse_extraction(response, concerts_schema)
    assert len(result.keywords) == 1
    assert result.keywords[0].kind == KeywordKind.Schema  # first occurrence wins


def test_parse_empty_response_is_empty_set(concerts_schema):
    assert parse_extraction("", concerts_schema).keywords == []


def test_keyword_validate(concerts_schema):
    result = parse_extraction("x | schema | singer | name", concerts_schema)
    assert result.keywords[0].validate(concerts_schema)


def test_serialize_round_trips(concerts_schema):
    response = "x | data_content | singer | name, country\ny | schema | singer | age"
    result = parse_extraction(response, concerts_schema)
    again = parse_extraction(result.serialize(), concerts_schema)
    assert again.keywords == result.keywords


def _adapters(entries):
    return Adapters(chat=MockChatModel(entries), embedder=MockEmbedder())


def test_extract_keywords_happy_path(concerts_db, concerts_schema):
    question = "Who sings?"
    adapters = _adapters(
        [script_entry(TemplateId.KeywordExtraction, question, "who | schema | singer | name")]
    )
    conn = open_read_only(concerts_db)
    samples = sample_all_tables(conn, concerts_schema, 2)
    conn.close()
    result = extract_keywords(question, concerts_schema, samples, adapters, "q1")
    assert result.question_id == "q1"
    assert [k.surface for k in result.keywords] == ["who"]
    assert len(adapters.trace) == 1


def test_extract_keywords_reprompts_once(concerts_schema):
    question = "Who sings?"
    adapters = _adapters(
        [
            script_entry(TemplateId.KeywordExtraction, question, "no pipes here"),
            script_entry(
                TemplateId.KeywordExtraction,
                question + _REPROMPT_SUFFIX,
                "who | schema | singer | name",
            ),
        ]
    )
    result = extract_keywords(question, concerts_schema, None, adapters)
    assert [k.surface for k in result.keywords] == ["who"]
    assert len(adapters.trace) == 2


def test_extract_keywords_fails_after_second_garbage(concerts_schema):
    question = "Who sings?"
    adapters = _adapters(
        [
            script_entry(TemplateId.KeywordExtraction, question, "garbage"),
            script_entry(TemplateId.KeywordExtraction, question + _REPROMPT_SUFFIX, "garbage"),
        ]
    )
    with pytest.raises(ExtractionError):
        extract_keywords(question, concerts_schema, None, adapters)
