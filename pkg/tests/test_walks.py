import numpy as np
import pytest

from kgrec.errors import KgrecError
from kgrec.kg import build_graph
from kgrec.walks import (
    RelationWeights,
    WalkConfig,
    generate_biased_walks,
    generate_uniform_walks,
    incident_edges,
    transition_distribution,
)


def star_graph():
    """Center c with one likes-edge to t and one cites-edge to u."""
    return build_graph([
        ("urn:c", "urn:likes", "urn:t"),
        ("urn:c", "urn:cites", "urn:u"),
    ])


class TestConfig:
    def test_defaults(self):
        cfg = WalkConfig()
        assert cfg.walks_per_node == 10 and cfg.walk_length == 40

    def test_validation(self):
        with pytest.raises(KgrecError):
            WalkConfig(walk_length=1)
        with pytest.raises(KgrecError):
            WalkConfig(walks_per_node=0)


class TestRelationWeights:
    def test_positive_only(self):
        with pytest.raises(KgrecError):
            RelationWeights(weights={0: 0.0})
        with pytest.raises(KgrecError):
            RelationWeights(default_weight=-1.0)

    def test_from_tsv_resolves_iris(self, tmp_path):
        g = star_graph()
        path = tmp_path / "w.tsv"
        path.write_text("# weights\nurn:likes\t5.0\nurn:absent\t9.0\n")
        rw = RelationWeights.from_tsv(path, g)
        assert rw.weight(g.relation_index["urn:likes"]) == 5.0
        assert rw.weight(g.relation_index["urn:cites"]) == 1.0
        assert len(rw.weights) == 1  # absent relation dropped


class TestTransitions:
    def test_incident_edges_undirected(self):
        g = star_graph()
        c = g.entity_index["urn:c"]
        t = g.entity_index["urn:t"]
        assert len(incident_edges(g, c)) == 2
        assert len(incident_edges(g, t)) == 1  # inverse edge back to center

    def test_uniform_distribution(self):
        g = star_graph()
        dist = transition_distribution(g, g.entity_index["urn:c"])
        assert np.allclose(dist, [0.5, 0.5])

    def test_weighted_distribution(self):
        g = star_graph()
        rw = RelationWeights(weights={g.relation_index["urn:likes"]: 5.0})
        dist = transition_distribution(g, g.entity_index["urn:c"], rw)
        assert np.allclose(sorted(dist), [1 / 6, 5 / 6])

    def test_isolated_node_empty(self):
        g = build_graph([("a", "p", "b"), ("c", "p", "c")])
        # no isolated node exists here, so check the empty-vector contract on
        # a node after removing its edges is moot; use a leaf instead
        dist = transition_distribution(g, g.entity_index["b"])
        assert dist.sum() == pytest.approx(1.0)


class TestGeneration:
    def test_shape_and_start_nodes(self, toy_graph):
        cfg = WalkConfig(walks_per_node=3, walk_length=7, seed=1)
        corpus = generate_uniform_walks(toy_graph, cfg)
        assert len(corpus) == 3 * toy_graph.entity_count
        for w, walk in enumerate(corpus):
            assert walk[0] == w // 3
            assert len(walk) == 7  # no isolated nodes -> full length

    def test_steps_follow_edges(self, toy_graph):
        cfg = WalkConfig(walks_per_node=2, walk_length=10, seed=3)
        corpus = generate_uniform_walks(toy_graph, cfg)
        for walk in corpus:
            for a, b in zip(walk, walk[1:]):
                nbrs = {n for n, _ in incident_edges(toy_graph, int(a))}
                assert int(b) in nbrs

    def test_deterministic_and_seed_sensitive(self, toy_graph):
        cfg = WalkConfig(seed=5)
        a = generate_uniform_walks(toy_graph, cfg)
        b = generate_uniform_walks(toy_graph, cfg)
        c = generate_uniform_walks(toy_graph, WalkConfig(seed=6))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert any(not np.array_equal(x, y) for x, y in zip(a, c))

    def test_biased_requires_weights(self, toy_graph):
        with pytest.raises(KgrecError):
            generate_biased_walks(toy_graph, WalkConfig(), None)

    def test_bias_shifts_visit_counts(self):
        g = star_graph()
        rw = RelationWeights(weights={g.relation_index["urn:likes"]: 50.0})
        cfg = WalkConfig(walks_per_node=20, walk_length=20, seed=0)
        corpus = generate_biased_walks(g, cfg, rw)
        t, u = g.entity_index["urn:t"], g.entity_index["urn:u"]
        visits = np.zeros(g.entity_count)
        for walk in corpus:
            for node in walk:
                visits[node] += 1
        assert visits[t] > 5 * visits[u]

    def test_corpus_write(self, tmp_path, toy_graph):
        cfg = WalkConfig(walks_per_node=1, walk_length=4, seed=0)
        corpus = generate_uniform_walks(toy_graph, cfg)
        corpus.write(tmp_path / "walks.txt", toy_graph)
        lines = (tmp_path / "walks.txt").read_text().splitlines()
        assert len(lines) == len(corpus)
        assert lines[0].split()[0] == toy_graph.entities[0]
