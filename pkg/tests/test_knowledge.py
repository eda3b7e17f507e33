"""Knowledge classification, persistence, relation import, and alignment."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcsr.config import RelationMapping
from tcsr.errors import MappingSpecError
from tcsr.extraction import Keyword, KeywordKind
from tcsr.fuzzer import SearchResult, SeedSql, SkeletonId
from tcsr.gateway import EmbeddingVector, MockEmbedder
from tcsr.knowledge import (
    AlignmentResult,
    ClassificationLabel,
    EncodingKnowledge,
    KnowledgeTable,
    Provenance,
    align,
    classify,
    cosine,
    import_relation_knowledge,
    normalize,
)
from tcsr.schema_catalog import open_read_only


def _seed(value="v"):
    return SeedSql(
        keyword_surface="k", table="t", column="c", probe_value=value,
        skeleton=SkeletonId.ExactMatch, sql_text="SELECT 1",
    )


def _result(values, truncated=False, error=None):
    return SearchResult(seed=_seed(), distinct_values=list(values), truncated=truncated, error=error)


def _keyword(surface="k"):
    return Keyword(surface=surface, kind=KeywordKind.DataContent, table="t", candidate_columns=("c",))


def test_classify_trichotomy():
    assert classify(_result(["only"])).label == ClassificationLabel.UniqueValue
    assert classify(_result(["only"])).value == "only"
    assert classify(_result([])).label == ClassificationLabel.Discard
    assert classify(_result(["a", "b"])).label == ClassificationLabel.Discard
    assert classify(_result(["a"], truncated=True)).label == ClassificationLabel.Discard
    assert classify(_result(["a"], error="boom")).label == ClassificationLabel.Discard


def test_normalize_contract():
    record = normalize(_keyword(), "db", _result(["stored"]))
    assert record == EncodingKnowledge(
        keyword="k", database_name="db", table_name="t", column_name="c",
        stored_value="stored", provenance=Provenance.FuzzMined,
    )
    with pytest.raises(ValueError):
        normalize(_keyword(), "db", _result(["a", "b"]))


def test_encoding_knowledge_requires_non_empty_fields():
    with pytest.raises(ValueError):
        EncodingKnowledge(keyword="", database_name="d", table_name="t",
                          column_name="c", stored_value="v")


def test_json_round_trip_field_names():
    record = EncodingKnowledge(
        keyword="GDP 增长率", database_name="econ", table_name="nationalecodata",
        column_name="roworder", stored_value="5", provenance=Provenance.RelationTable,
    )
    payload = json.loads(record.to_json())
    assert set(payload) == {"keyword", "database", "table", "column", "value", "provenance"}
    assert payload["provenance"] == "relation_table"
    assert EncodingKnowledge.from_json(record.to_json()) == record


def test_knowledge_table_upsert_order_and_dedup():
    a = EncodingKnowledge("k1", "d", "t", "c", "v1")
    b = EncodingKnowledge("k2", "d", "t", "c", "v2")
    table = KnowledgeTable()
    assert table.upsert(a) and table.upsert(b)
    assert not table.upsert(EncodingKnowledge("k1", "d", "t", "c", "v1", Provenance.RelationTable))
    assert table.entries == [a, b]                       # dedup ignores provenance
    assert len(table) == 2


def test_knowledge_table_save_load_round_trip(tmp_path):
    path = tmp_path / "knowledge.jsonl"
    table = KnowledgeTable(
        [
            EncodingKnowledge("k1", "d1", "t", "c", "v"),
            EncodingKnowledge("k2", "d2", "t", "c", "v", Provenance.RelationTable),
        ]
    )
    table.save(path)
    loaded = KnowledgeTable.load(path)
    assert loaded.entries == table.entries
    assert loaded.for_database("d1") == table.entries[:1]
    assert KnowledgeTable.load(tmp_path / "missing.jsonl").entries == []


def test_import_relation_knowledge_per_row_column(econ_db):
    conn = open_read_only(econ_db)
    mapping = RelationMapping(
        table="code_rel", keyword_column="keyword", target_table="nationalecodata",
        target_column_name_or_column="colname", target_value_column="colvalue",
    )
    records = import_relation_knowledge(conn, mapping, "econ")
    conn.close()
    assert records == [
        EncodingKnowledge(
            keyword="GDP growth rate", database_name="econ",
            table_name="nationalecodata", column_name="roworder",
            stored_value="5", provenance=Provenance.RelationTable,
        )
    ]


def test_import_relation_knowledge_literal_column(econ_db):
    conn = open_read_only(econ_db)
    mapping = RelationMapping(
        table="code_rel", keyword_column="keyword", target_table="nationalecodata",
        target_column_name_or_column="indexname",        # not a code_rel column: literal
        target_value_column="colvalue",
    )
    records = import_relation_knowledge(conn, mapping, "econ")
    conn.close()
    assert records[0].column_name == "indexname"
    assert records[0].stored_value == "5"


def test_import_relation_knowledge_errors(econ_db):
    conn = open_read_only(econ_db)
    with pytest.raises(MappingSpecError):
        import_relation_knowledge(
            conn,
            RelationMapping(table="missing", keyword_column="k",
                            target_column_name_or_column="c", target_value_column="v"),
            "econ",
        )
    with pytest.raises(MappingSpecError):
        import_relation_knowledge(
            conn,
            RelationMapping(table="code_rel", keyword_column="nope",
                            target_column_name_or_column="colname", target_value_column="colvalue"),
            "econ",
        )
    assert import_relation_knowledge(conn, RelationMapping(), "econ") == []
    conn.close()


def _vector(values):
    return EmbeddingVector(values=np.asarray(values, dtype=float))


def test_cosine_basics():
    assert cosine(_vector([1, 0]), _vector([1, 0])) == pytest.approx(1.0)
    assert cosine(_vector([1, 0]), _vector([0, 1])) == pytest.approx(0.0)
    assert cosine(_vector([1, 0]), _vector([-1, 0])) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        cosine(_vector([1, 0]), _vector([1, 0, 0]))
    with pytest.raises(ValueError):
        cosine(_vector([0, 0]), _vector([1, 0]))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=2, max_size=16),
    st.lists(st.floats(-100, 100), min_size=2, max_size=16),
    st.floats(0.01, 100),
)
def test_cosine_properties(a, b, scale):
    size = min(len(a), len(b))
    v = np.asarray(a[:size])
    w = np.asarray(b[:size])
    if np.linalg.norm(v) < 1e-6 or np.linalg.norm(w) < 1e-6:
        return
    score = cosine(_vector(v), _vector(w))
    assert -1.0 - 1e-9 <= score <= 1.0 + 1e-9
    assert score == pytest.approx(cosine(_vector(w), _vector(v)), abs=1e-9)
    assert score == pytest.approx(cosine(_vector(scale * v), _vector(w)), abs=1e-9)
    assert cosine(_vector(v), _vector(v)) == pytest.approx(1.0, abs=1e-9)


def _entry(keyword, value="v", column="c"):
    return EncodingKnowledge(
        keyword=keyword, database_name="d", table_name="t",
        column_name=column, stored_value=value,
    )


def test_align_empty_entries():
    result = align(_keyword("anything"), [], MockEmbedder())
    assert result == AlignmentResult(keyword="anything", best=None, score=0.0)


def test_align_picks_highest_cosine():
    entries = [_entry("population of china"), _entry("GDP growth rate", value="5")]
    result = align(_keyword("GDP growth rate"), entries, MockEmbedder())
    assert result.best == entries[1]
    assert result.score > 0.5


class _ConstantEmbedder:
    def embed(self, text):
        return EmbeddingVector(values=np.ones(4))


def test_align_tie_breaks_to_earliest_entry():
    entries = [_entry("first"), _entry("second")]
    result = align(_keyword("k"), entries, _ConstantEmbedder())
    assert result.best == entries[0]
    assert result.score == pytest.approx(1.0)


def test_align_min_similarity_filters():
    entries = [_entry("completely unrelated words about weather")]
    result = align(_keyword("GDP growth rate"), entries, MockEmbedder(), min_similarity=0.99)
    assert result.best is None
    assert result.score < 0.99


def test_embedding_text_shape():
    assert _entry("kw", value="val").embedding_text() == "kw | t.c | val"
