"""Synthetic planted-community knowledge graphs with known ground truth.

Three relation roles:

- a topology relation wired densely inside each community,
- a relevance relation connecting each query book to its true relevant set
  (which is emitted as ground truth) across community boundaries, and
- a noise relation drawn uniformly at random.

Relevance is assigned by hidden "theme" groups orthogonal to the community
partition, so raw connectivity and semantic relevance disagree by design.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kgrec.errors import KgrecError

TOPOLOGY_REL = "urn:rel:relatedTo"
RELEVANCE_REL = "urn:rel:recommendedWith"
NOISE_REL = "urn:rel:mentions"

# noise-edge slots drawn per entity; queries get extra slots so that their
# neighborhoods mix relevance and noise edges
_NOISE_SLOTS = 4
_QUERY_NOISE_SLOTS = 24


@dataclass
class SyntheticSpec:
    n_entities: int = 200
    n_communities: int = 2
    n_queries: int = 19
    n_themes: int = 4
    intra_p: float = 0.06       # same-community topology edge probability
    relevance_p: float = 0.3    # query -> theme-mate relevance edge probability
    noise_p: float = 0.5        # per noise slot
    seed: int = 0

    def __post_init__(self):
        if self.n_communities < 2:
            raise KgrecError("need at least 2 communities")
        for name in ("intra_p", "relevance_p", "noise_p"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise KgrecError(f"{name} must be in [0, 1], got {p}")
        if self.n_queries < 1 or self.n_queries >= self.n_entities:
            raise KgrecError("n_queries must be in [1, n_entities)")


def _iri(i):
    return f"urn:synth:e{i:04d}"


def generate(spec: SyntheticSpec):
    """Build the graph; returns (triples, ground_truth, queries, candidates).

    Triples are (head-iri, relation-iri, tail-iri); ground truth maps each
    query IRI to its non-empty relevant set, all of which appear in the graph.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_entities
    community = np.arange(n) % spec.n_communities
    theme = rng.integers(spec.n_themes, size=n)
    queries = sorted(rng.choice(n, size=spec.n_queries, replace=False).tolist())
    query_set = set(queries)

    triples = []
    # dense intra-community topology
    for i in range(n):
        for j in range(i + 1, n):
            if community[i] == community[j] and rng.random() < spec.intra_p:
                if rng.random() < 0.5:
                    triples.append((_iri(i), TOPOLOGY_REL, _iri(j)))
                else:
                    triples.append((_iri(j), TOPOLOGY_REL, _iri(i)))

    # relevance: each query connects to theme-mates, communities ignored
    truth = {}
    for q in queries:
        mates = [j for j in range(n)
                 if j != q and j not in query_set and theme[j] == theme[q]]
        chosen = [j for j in mates if rng.random() < spec.relevance_p]
        if not chosen and mates:
            chosen = [mates[int(rng.integers(len(mates)))]]
        for j in chosen:
            triples.append((_iri(q), RELEVANCE_REL, _iri(j)))
        if chosen:
            truth[_iri(q)] = {_iri(j) for j in chosen}

    # uniform noise
    for i in range(n):
        slots = _QUERY_NOISE_SLOTS if i in query_set else _NOISE_SLOTS
        for _ in range(slots):
            if rng.random() < spec.noise_p:
                j = int(rng.integers(n))
                if j != i:
                    triples.append((_iri(i), NOISE_REL, _iri(j)))

    candidates = [_iri(i) for i in range(n) if i not in query_set]
    return triples, truth, [_iri(q) for q in queries], candidates


def write_dataset(spec: SyntheticSpec, out_dir):
    """Emit graph.nt, ground_truth.tsv, candidates.tsv and weights.tsv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    triples, truth, queries, candidates = generate(spec)

    with open(out / "graph.nt", "w", encoding="utf-8") as f:
        f.write("# synthetic planted-community knowledge graph\n")
        for h, r, t in triples:
            f.write(f"<{h}> <{r}> <{t}> .\n")
    with open(out / "ground_truth.tsv", "w", encoding="utf-8") as f:
        for q in sorted(truth):
            for rel in sorted(truth[q]):
                f.write(f"{q}\t{rel}\n")
    (out / "candidates.tsv").write_text(
        "".join(c + "\n" for c in candidates), encoding="utf-8")
    (out / "weights.tsv").write_text(
        f"{RELEVANCE_REL}\t5.0\n{TOPOLOGY_REL}\t1.0\n{NOISE_REL}\t1.0\n",
        encoding="utf-8")
    return triples, truth, queries, candidates
