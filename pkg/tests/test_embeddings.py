import numpy as np
import pytest

from kgrec.embeddings import (
    EmbeddingTable,
    HybridConfig,
    concat_embeddings,
    cosine_similarity,
    rank_candidates,
    score_edge_shallow,
)
from kgrec.errors import KgrecError, UnknownEntityError


def table_from(rows, model="test"):
    return EmbeddingTable([f"e{i}" for i in range(len(rows))],
                          np.array(rows, dtype=np.float64), model=model)


class TestTable:
    def test_basic_accessors(self):
        t = table_from([[1.0, 0.0], [0.0, 1.0]])
        assert t.dim == 2 and len(t) == 2
        assert "e1" in t and "zzz" not in t
        assert np.array_equal(t.vector("e0"), [1.0, 0.0])

    def test_unknown_entity(self):
        t = table_from([[1.0, 0.0]])
        with pytest.raises(UnknownEntityError):
            t.vector("missing")

    def test_shape_and_finite_validation(self):
        with pytest.raises(KgrecError):
            EmbeddingTable(["a"], np.zeros((2, 3)))
        with pytest.raises(KgrecError):
            EmbeddingTable(["a"], np.array([[np.nan, 0.0]]))

    def test_save_load_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        t = EmbeddingTable(["urn:a", "urn:b"], rng.normal(size=(2, 5)), model="sgns")
        path = tmp_path / "t.emb.tsv"
        t.save_tsv(path)
        back = EmbeddingTable.load_tsv(path)
        assert back.entities == t.entities
        assert back.model == "sgns"
        assert np.array_equal(back.vectors, t.vectors)  # repr() is lossless

    def test_load_rejects_missing_header(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("urn:a\t1.0\n")
        with pytest.raises(KgrecError):
            EmbeddingTable.load_tsv(path)


class TestCosine:
    def test_known_values(self):
        assert cosine_similarity([1, 0], [1, 0]) == pytest.approx(1.0)
        assert cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0)
        assert cosine_similarity([1, 0], [-1, 0]) == pytest.approx(-1.0)

    def test_zero_vector_scores_zero(self):
        assert cosine_similarity([0.0, 0.0], [1.0, 2.0]) == 0.0

    def test_dim_mismatch(self):
        with pytest.raises(KgrecError):
            cosine_similarity([1.0], [1.0, 2.0])


class TestHybrid:
    def test_dim_is_sum_of_sources(self):
        a = table_from([[1.0, 2.0], [3.0, 4.0]], model="deepwalk")
        b = EmbeddingTable(["e0", "e1"], np.ones((2, 3)), model="brw")
        h = concat_embeddings(a, b)
        assert h.dim == a.dim + b.dim
        assert h.model == "hybrid(deepwalk+brw)"

    def test_sources_unit_normalized(self):
        a = table_from([[3.0, 0.0]])
        b = table_from([[0.0, 0.004]])
        h = concat_embeddings(a, b)
        assert np.allclose(h.vectors, [[1.0, 0.0, 0.0, 1.0]])

    def test_normalization_can_be_disabled(self):
        a = table_from([[3.0, 0.0]])
        b = table_from([[0.0, 4.0]])
        h = concat_embeddings(a, b, HybridConfig(l2_normalize_sources=False))
        assert np.allclose(h.vectors, [[3.0, 0.0, 0.0, 4.0]])

    def test_zero_vectors_pass_through(self):
        a = table_from([[0.0, 0.0]])
        b = table_from([[1.0, 0.0]])
        h = concat_embeddings(a, b)
        assert np.allclose(h.vectors, [[0.0, 0.0, 1.0, 0.0]])

    def test_entity_mismatch_reports_difference(self):
        a = EmbeddingTable(["x", "y"], np.ones((2, 2)))
        b = EmbeddingTable(["x", "z"], np.ones((2, 2)))
        with pytest.raises(KgrecError) as err:
            concat_embeddings(a, b)
        assert "y" in str(err.value) and "z" in str(err.value)


class TestRanking:
    def test_order_and_query_exclusion(self):
        t = EmbeddingTable(
            ["q", "best", "mid", "worst"],
            np.array([[1.0, 0.0], [0.9, 0.1], [0.5, 0.5], [-1.0, 0.0]]),
        )
        ranked = rank_candidates(t, "q", ["q", "worst", "mid", "best"])
        assert ranked.entities() == ["best", "mid", "worst"]

    def test_tie_break_by_entity_id(self):
        t = EmbeddingTable(["q", "b", "a"], np.array([[1.0, 0.0]] * 3))
        ranked = rank_candidates(t, "q", ["b", "a"])
        assert ranked.entities() == ["a", "b"]

    def test_top_k(self):
        t = EmbeddingTable(["q", "a", "b", "c"],
                           np.array([[1.0], [0.5], [2.0], [3.0]]))
        assert len(rank_candidates(t, "q", ["a", "b", "c"], top_k=2).items) == 2

    def test_to_csv_format(self):
        t = EmbeddingTable(["q", "a"], np.array([[1.0, 0.0], [1.0, 0.0]]))
        csv = rank_candidates(t, "q", ["a"]).to_csv()
        lines = csv.splitlines()
        assert lines[0] == "rank,candidate,score"
        assert lines[1] == "1,a,1.000000"


def test_score_edge_shallow():
    t = EmbeddingTable(["a", "b"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert score_edge_shallow(t, "a", "b") == pytest.approx(0.0)
