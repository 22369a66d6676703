"""Random-walk corpus generation: uniform and relation-weighted walkers.

Walks traverse the graph as undirected (inverse edges are added for walking
only); otherwise directed leaf entities would truncate every walk almost
immediately. Each walk draws its randomness from a stream derived from
(seed, start node, walk index), so the corpus is independent of execution
order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kgrec import _kernels
from kgrec.errors import KgrecError
from kgrec.kg import KnowledgeGraph


@dataclass
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 2:
            raise KgrecError("walk_length must be >= 2")
        if self.walks_per_node < 1:
            raise KgrecError("walks_per_node must be >= 1")


@dataclass
class RelationWeights:
    """Positive sampling weight per relation id; unlisted relations use the default."""

    weights: dict = field(default_factory=dict)
    default_weight: float = 1.0

    def __post_init__(self):
        for rel, w in self.weights.items():
            if not w > 0:
                raise KgrecError(f"relation weight for id {rel} must be > 0, got {w}")
        if not self.default_weight > 0:
            raise KgrecError(f"default_weight must be > 0, got {self.default_weight}")

    def weight(self, relation):
        return self.weights.get(relation, self.default_weight)

    @classmethod
    def from_tsv(cls, path, graph: KnowledgeGraph, default_weight=1.0):
        """Load ``relation-iri<TAB>weight`` lines, resolved against the graph.

        Weights for relations absent from the graph are ignored.
        """
        weights = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            iri, w = line.split("\t")
            rid = graph.relation_index.get(iri)
            if rid is not None:
                weights[rid] = float(w)
        return cls(weights=weights, default_weight=default_weight)


@dataclass
class WalkCorpus:
    walks: list                 # list of int numpy arrays
    config: WalkConfig
    weighted: bool

    def __iter__(self):
        return iter(self.walks)

    def __len__(self):
        return len(self.walks)

    def write(self, path, graph: KnowledgeGraph):
        with open(path, "w", encoding="utf-8") as f:
            for walk in self.walks:
                f.write(" ".join(graph.entities[n] for n in walk) + "\n")


class _UndirectedView:
    """CSR incident-edge arrays over the undirected walk view of a graph."""

    def __init__(self, graph: KnowledgeGraph):
        n = graph.entity_count
        deg = np.zeros(n, dtype=np.int64)
        for t in graph.triples:
            deg[t.head] += 1
            deg[t.tail] += 1
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=self.indptr[1:])
        self.nbrs = np.empty(self.indptr[-1], dtype=np.int64)
        self.rels = np.empty(self.indptr[-1], dtype=np.int64)
        cursor = self.indptr[:-1].copy()
        for t in graph.triples:
            self.nbrs[cursor[t.head]] = t.tail
            self.rels[cursor[t.head]] = t.relation
            cursor[t.head] += 1
            self.nbrs[cursor[t.tail]] = t.head
            self.rels[cursor[t.tail]] = t.relation
            cursor[t.tail] += 1

    def edge_weights(self, weights: RelationWeights | None):
        if weights is None:
            return np.ones(len(self.rels), dtype=np.float64)
        table = np.array(
            [weights.weight(r) for r in range(int(self.rels.max(initial=-1)) + 1)]
            or [1.0],
            dtype=np.float64,
        )
        return table[self.rels]


def incident_edges(graph: KnowledgeGraph, node):
    """(neighbor, relation) pairs incident to ``node`` in the undirected view."""
    pairs = [(t, r) for r, t in graph.out_adj[node]]
    pairs += [(h, r) for r, h in graph.in_adj[node]]
    return pairs


def transition_distribution(graph: KnowledgeGraph, node, weights=None):
    """Step probabilities over the incident-edge slots of ``node``.

    Uniform walking corresponds to ``weights=None``. An isolated node yields
    an empty vector.
    """
    edges = incident_edges(graph, node)
    if not edges:
        return np.zeros(0, dtype=np.float64)
    if weights is None:
        raw = np.ones(len(edges), dtype=np.float64)
    else:
        raw = np.array([weights.weight(r) for _, r in edges], dtype=np.float64)
    return raw / raw.sum()


def _walk_uniforms(config: WalkConfig, n_nodes):
    """Per-walk uniform draws, streamed from (seed, node, walk index)."""
    n_walks = n_nodes * config.walks_per_node
    uniforms = np.empty((n_walks, config.walk_length - 1), dtype=np.float64)
    starts = np.empty(n_walks, dtype=np.int64)
    w = 0
    for node in range(n_nodes):
        for j in range(config.walks_per_node):
            rng = np.random.default_rng([config.seed, node, j])
            uniforms[w] = rng.random(config.walk_length - 1)
            starts[w] = node
            w += 1
    return starts, uniforms


def _generate(graph: KnowledgeGraph, config: WalkConfig, weights):
    if graph.entity_count == 0:
        raise KgrecError("graph has no entities")
    view = _UndirectedView(graph)
    starts, uniforms = _walk_uniforms(config, graph.entity_count)
    out = np.zeros((len(starts), config.walk_length), dtype=np.int64)
    lengths = np.zeros(len(starts), dtype=np.int64)
    _kernels.walk_batch(starts, uniforms, view.indptr, view.nbrs,
                        view.edge_weights(weights), out, lengths)
    walks = [out[w, : lengths[w]].copy() for w in range(len(starts))]
    return WalkCorpus(walks=walks, config=config, weighted=weights is not None)


def generate_uniform_walks(graph: KnowledgeGraph, config: WalkConfig) -> WalkCorpus:
    """walks_per_node uniform walks from every entity."""
    return _generate(graph, config, None)


def generate_biased_walks(graph: KnowledgeGraph, config: WalkConfig,
                          weights: RelationWeights) -> WalkCorpus:
    """Walks whose step probabilities are proportional to relation weights."""
    if weights is None:
        raise KgrecError("biased walks require relation weights")
    return _generate(graph, config, weights)
