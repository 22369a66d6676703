"""Embedding tables, hybrid concatenation and cosine-similarity ranking."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kgrec.errors import KgrecError, UnknownEntityError


class EmbeddingTable:
    """Dense real vector per entity, keyed by IRI.

    The common currency of all models: walk-based trainers, the graph
    convolution and the hybrid concatenation all produce one of these.
    """

    def __init__(self, entities, vectors, model="unknown"):
        self.entities = list(entities)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.model = model
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.entities):
            raise KgrecError("vectors must be (n_entities, dim)")
        if not np.all(np.isfinite(self.vectors)):
            raise KgrecError("embedding table contains non-finite components")
        self.index = {e: i for i, e in enumerate(self.entities)}

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __contains__(self, entity):
        return entity in self.index

    def __len__(self):
        return len(self.entities)

    def vector(self, entity):
        i = self.index.get(entity)
        if i is None:
            raise UnknownEntityError(f"entity not in embedding table: {entity}")
        return self.vectors[i]

    def save_tsv(self, path):
        """Write ``entity<TAB>f1<TAB>...<TAB>fd`` rows under a ``#dim= model=`` header."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"#dim={self.dim} model={self.model}\n")
            for e, row in zip(self.entities, self.vectors):
                f.write(e + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_tsv(cls, path):
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("#dim="):
            raise KgrecError(f"missing embedding header in {path}")
        header = dict(part.split("=", 1) for part in lines[0][1:].split())
        entities, rows = [], []
        for line in lines[1:]:
            if not line:
                continue
            parts = line.split("\t")
            entities.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
        table = cls(entities, np.array(rows, dtype=np.float64), model=header.get("model", "unknown"))
        if table.dim != int(header["dim"]):
            raise KgrecError(f"header dim {header['dim']} does not match data dim {table.dim}")
        return table


@dataclass
class HybridConfig:
    l2_normalize_sources: bool = True


@dataclass
class RankedList:
    query: str
    items: list = field(default_factory=list)  # (candidate, score), descending

    def entities(self):
        return [c for c, _ in self.items]

    def to_csv(self):
        lines = ["rank,candidate,score"]
        for rank, (c, s) in enumerate(self.items, start=1):
            lines.append(f"{rank},{c},{s:.6f}")
        return "\n".join(lines) + "\n"


def concat_embeddings(a: EmbeddingTable, b: EmbeddingTable,
                      config: HybridConfig | None = None) -> EmbeddingTable:
    """Concatenate two tables over an identical entity set.

    Sources are unit-normalized first (unless disabled) so that neither
    dominates the hybrid by scale; zero vectors pass through unchanged.
    """
    config = config or HybridConfig()
    if set(a.entities) != set(b.entities):
        diff = sorted(set(a.entities) ^ set(b.entities))
        raise KgrecError(f"entity sets differ; symmetric difference: {diff}")

    def prep(table, order):
        rows = np.array([table.vector(e) for e in order])
        if config.l2_normalize_sources:
            norms = np.linalg.norm(rows, axis=1, keepdims=True)
            rows = np.where(norms > 0, rows / np.where(norms == 0, 1.0, norms), rows)
        return rows

    order = a.entities
    combined = np.hstack([prep(a, order), prep(b, order)])
    return EmbeddingTable(order, combined, model=f"hybrid({a.model}+{b.model})")


def cosine_similarity(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise KgrecError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def rank_candidates(table: EmbeddingTable, query, candidates, top_k=None) -> RankedList:
    """Candidates (minus the query itself) sorted by cosine to the query.

    Ties break by ascending entity identifier so rankings are reproducible.
    """
    q = table.vector(query)
    scored = []
    for c in candidates:
        if c == query:
            continue
        scored.append((c, cosine_similarity(q, table.vector(c))))
    scored.sort(key=lambda cs: (-cs[1], cs[0]))
    if top_k is not None:
        scored = scored[:top_k]
    return RankedList(query=query, items=scored)


def score_edge_shallow(table: EmbeddingTable, head, tail):
    """Relation-agnostic edge score for walk-based models: endpoint cosine."""
    return cosine_similarity(table.vector(head), table.vector(tail))
