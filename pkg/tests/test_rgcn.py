import numpy as np
import pytest

from kgrec.errors import KgrecError
from kgrec.kg import Triple, build_graph, split_edges
from kgrec.rgcn import (
    EdgeIndex,
    LayerParams,
    RgcnConfig,
    compose_basis,
    init_parameters,
    load_checkpoint,
    loss_and_grads,
    rgcn_forward,
    save_checkpoint,
    score_triples,
    train_rgcn,
)
from tests.conftest import random_raw_triples


def small_graph(seed=0, n_triples=60):
    rng = np.random.default_rng(seed)
    return build_graph(random_raw_triples(rng, n_entities=15, n_relations=3,
                                          n_triples=n_triples))


class TestConfig:
    def test_basis_count_validation(self):
        cfg = RgcnConfig(use_basis=True, num_bases=10)
        with pytest.raises(KgrecError):
            cfg.validate(relation_count=2)
        cfg.validate(relation_count=5)  # 10 <= 2*5 is fine


class TestEdgeIndex:
    def test_forward_and_inverse_buckets(self):
        triples = [Triple(0, 0, 1), Triple(2, 1, 1)]
        idx = EdgeIndex(triples, n_entities=3, n_relations=2)
        assert len(idx.buckets) == 4
        src, dst, _ = idx.buckets[0]           # relation 0 forward
        assert (src[0], dst[0]) == (0, 1)
        src, dst, _ = idx.buckets[2]           # relation 0 inverse
        assert (src[0], dst[0]) == (1, 0)

    def test_mean_normalization_coefficients(self):
        # two relation-0 edges into node 2 -> each message weighted 1/2
        triples = [Triple(0, 0, 2), Triple(1, 0, 2)]
        idx = EdgeIndex(triples, n_entities=3, n_relations=1)
        _, dst, coeff = idx.buckets[0]
        assert np.all(dst == 2) and np.allclose(coeff, 0.5)


class TestForward:
    def test_output_shape_and_determinism(self):
        g = small_graph()
        cfg = RgcnConfig(hidden_dim=8, num_layers=2, seed=3)
        params = init_parameters(g.entity_count, g.relation_count, cfg)
        edges = EdgeIndex(g.triples, g.entity_count, g.relation_count)
        out1 = rgcn_forward(edges, params, cfg)
        out2 = rgcn_forward(edges, params, cfg)
        assert out1.shape == (g.entity_count, 8)
        assert np.array_equal(out1, out2)

    def test_basis_matches_composed_dense(self):
        g = small_graph()
        cfg = RgcnConfig(hidden_dim=6, num_layers=1, use_basis=True,
                         num_bases=2, seed=1)
        params = init_parameters(g.entity_count, g.relation_count, cfg)
        edges = EdgeIndex(g.triples, g.entity_count, g.relation_count)
        dense_layers = [LayerParams(w_self=l.w_self, w_rel=l.effective_w_rel())
                        for l in params.layers]
        dense = type(params)(node_embed=params.node_embed, layers=dense_layers,
                             decoder=params.decoder)
        assert np.allclose(rgcn_forward(edges, params, cfg),
                           rgcn_forward(edges, dense, cfg))

    def test_compose_basis(self):
        bases = np.stack([np.eye(2), np.ones((2, 2))])
        coeffs = np.array([[2.0, 1.0]])
        assert np.allclose(compose_basis(bases, coeffs, 0),
                           2.0 * np.eye(2) + np.ones((2, 2)))


class TestGradients:
    def check_block(self, params, grads, getter, setter, g, cfg, edges, pos, neg,
                    rng, n_points=5):
        from kgrec.linalg import finite_difference_check
        block = getter(params)
        coords = rng.choice(block.size, size=min(n_points, block.size),
                            replace=False)

        def f(flat_block):
            setter(params, flat_block.reshape(block.shape))
            loss, _ = loss_and_grads(edges, params, cfg, pos, neg)
            setter(params, block)
            return loss

        report = finite_difference_check(f, block, getter(grads), coords=coords)
        return report.max_relative_error

    def test_all_parameter_blocks(self):
        g = small_graph(seed=4)
        cfg = RgcnConfig(hidden_dim=5, num_layers=2, weight_decay=1e-3, seed=0)
        params = init_parameters(g.entity_count, g.relation_count, cfg)
        edges = EdgeIndex(g.triples, g.entity_count, g.relation_count)
        rng = np.random.default_rng(0)
        pos = g.triples[:20]
        neg = [Triple((t.head + 1) % g.entity_count, t.relation, t.tail)
               for t in pos]
        neg = [t for t in neg if t.as_tuple() not in g.triple_set]
        _, grads = loss_and_grads(edges, params, cfg, pos, neg)

        blocks = [
            (lambda p: p.node_embed, lambda p, v: setattr(p, "node_embed", v)),
            (lambda p: p.decoder, lambda p, v: setattr(p, "decoder", v)),
        ]
        for l in range(cfg.num_layers):
            blocks.append((lambda p, l=l: p.layers[l].w_self,
                           lambda p, v, l=l: setattr(p.layers[l], "w_self", v)))
            blocks.append((lambda p, l=l: p.layers[l].w_rel,
                           lambda p, v, l=l: setattr(p.layers[l], "w_rel", v)))
        for getter, setter in blocks:
            err = self.check_block(params, grads, getter, setter, g, cfg,
                                   edges, pos, neg, rng)
            assert err < 1e-4

    def test_basis_blocks(self):
        g = small_graph(seed=5)
        cfg = RgcnConfig(hidden_dim=4, num_layers=1, use_basis=True,
                         num_bases=2, weight_decay=0.0, seed=2)
        params = init_parameters(g.entity_count, g.relation_count, cfg)
        edges = EdgeIndex(g.triples, g.entity_count, g.relation_count)
        rng = np.random.default_rng(1)
        pos = g.triples[:15]
        neg = [Triple(t.head, t.relation, (t.tail + 2) % g.entity_count)
               for t in pos]
        neg = [t for t in neg if t.as_tuple() not in g.triple_set]
        _, grads = loss_and_grads(edges, params, cfg, pos, neg)
        for getter, setter in [
            (lambda p: p.layers[0].bases, lambda p, v: setattr(p.layers[0], "bases", v)),
            (lambda p: p.layers[0].coeffs, lambda p, v: setattr(p.layers[0], "coeffs", v)),
        ]:
            err = self.check_block(params, grads, getter, setter, g, cfg,
                                   edges, pos, neg, rng)
            assert err < 1e-4


class TestScoring:
    def test_distmult_by_hand(self):
        emb = np.array([[1.0, 2.0], [3.0, 4.0]])
        decoder = np.array([[0.5, 0.25]])
        score = score_triples(emb, decoder, [Triple(0, 0, 1)])
        assert score[0] == pytest.approx(1 * 0.5 * 3 + 2 * 0.25 * 4)

    def test_unknown_relation_rejected(self):
        with pytest.raises(KgrecError):
            score_triples(np.ones((2, 2)), np.ones((1, 2)), [Triple(0, 5, 1)])


class TestTraining:
    def test_loss_decreases_and_log_populated(self):
        g = small_graph(seed=6, n_triples=80)
        split = split_edges(g, seed=0)
        cfg = RgcnConfig(hidden_dim=8, epochs=30, patience=30, seed=0)
        params, table, log = train_rgcn(g, split, cfg)
        assert len(log.entries) == 30
        first, last = log.entries[0][1], log.entries[-1][1]
        assert last < first
        assert table.dim == 8 and len(table) == g.entity_count

    def test_deterministic(self):
        g = small_graph(seed=7)
        split = split_edges(g, seed=1)
        cfg = RgcnConfig(hidden_dim=6, epochs=5, seed=3)
        _, a, _ = train_rgcn(g, split, cfg)
        _, b, _ = train_rgcn(g, split, cfg)
        assert np.array_equal(a.vectors, b.vectors)

    def test_epochs_zero_returns_initial_embedding(self):
        g = small_graph(seed=8)
        split = split_edges(g, seed=0)
        _, table, log = train_rgcn(g, split, RgcnConfig(hidden_dim=4, epochs=0))
        assert log.entries == [] and table.dim == 4

    def test_empty_validation_rejected(self):
        g = small_graph(seed=9)
        split = split_edges(g, seed=0)
        split.val = []
        with pytest.raises(KgrecError):
            train_rgcn(g, split, RgcnConfig(epochs=5))

    def test_early_stopping_truncates(self):
        g = small_graph(seed=10)
        split = split_edges(g, seed=0)
        cfg = RgcnConfig(hidden_dim=6, epochs=60, patience=3, seed=0)
        _, _, log = train_rgcn(g, split, cfg)
        assert len(log.entries) < 60
        assert log.best_epoch <= log.entries[-1][0]


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        g = small_graph(seed=11)
        split = split_edges(g, seed=0)
        cfg = RgcnConfig(hidden_dim=5, epochs=3, seed=1)
        params, _, log = train_rgcn(g, split, cfg)
        path = tmp_path / "model.npz"
        save_checkpoint(path, params, cfg, log, g)
        params2, cfg2, log2, entities, relations = load_checkpoint(path)
        assert cfg2 == cfg
        assert entities == g.entities and relations == g.relations
        assert np.array_equal(params2.node_embed, params.node_embed)
        assert np.array_equal(params2.layers[0].w_rel, params.layers[0].w_rel)
        assert log2.best_epoch == log.best_epoch
        assert len(log2.entries) == len(log.entries)
