"""Triple store: parsing, interning, splits and negative sampling.

Entities and relations are interned to dense integer ids in first-appearance
order. Literal objects are interned as ordinary nodes; the downstream walkers
and the graph convolution both operate on a homogeneous node set.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kgrec.errors import KgrecError, ParseError

# <iri> <iri> (<iri> | "literal"[^^<dt>|@lang]) .
_NT_LINE = re.compile(
    r'^<([^<>]*)>\s+<([^<>]*)>\s+'
    r'(<[^<>]*>|"(?:[^"\\]|\\.)*"(?:\^\^<[^<>]*>|@[A-Za-z0-9-]+)?)\s*\.$'
)


@dataclass(frozen=True)
class Triple:
    """One (head, relation, tail) edge in interned-id form."""

    head: int
    relation: int
    tail: int

    def as_tuple(self):
        return (self.head, self.relation, self.tail)


class KnowledgeGraph:
    """Deduplicated multi-relational directed graph with interned id tables."""

    def __init__(self, entities, relations, triples):
        self.entities = list(entities)
        self.relations = list(relations)
        self.entity_index = {e: i for i, e in enumerate(self.entities)}
        self.relation_index = {r: i for i, r in enumerate(self.relations)}
        self.triples = list(triples)
        self.triple_set = {t.as_tuple() for t in self.triples}

        self.out_adj = [[] for _ in self.entities]  # node -> [(relation, tail)]
        self.in_adj = [[] for _ in self.entities]   # node -> [(relation, head)]
        for t in self.triples:
            self.out_adj[t.head].append((t.relation, t.tail))
            self.in_adj[t.tail].append((t.relation, t.head))

    @property
    def entity_count(self):
        return len(self.entities)

    @property
    def relation_count(self):
        return len(self.relations)

    @property
    def triple_count(self):
        return len(self.triples)

    def degree(self, node):
        return len(self.out_adj[node]) + len(self.in_adj[node])

    def iri_triple(self, t: Triple):
        return (self.entities[t.head], self.relations[t.relation], self.entities[t.tail])

    def stats(self):
        return {
            "triples": self.triple_count,
            "entities": self.entity_count,
            "relations": self.relation_count,
        }


@dataclass
class DataSplit:
    """Disjoint train/val/test partition of a graph's edge set."""

    train: list
    val: list
    test: list
    seed: int
    ratios: tuple
    uncovered: list = field(default_factory=list)  # entities no repair swap could cover


@dataclass
class NegativeSampleSet:
    """Corruption-generated false triples, filtered against all true edges."""

    negatives: list
    per_positive_ratio: int
    seed: int


def parse_ntriples(text):
    """Parse line-oriented N-Triples into (head, relation, tail) string tuples.

    Comment lines (leading ``#``) and blank lines are skipped. IRIs lose their
    angle brackets; literals keep their full lexical form and are interned
    like any other node.
    """
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _NT_LINE.match(line)
        if m is None:
            raise ParseError(f"malformed N-Triples statement: {raw!r}", line=lineno)
        head, rel, obj = m.group(1), m.group(2), m.group(3)
        if obj.startswith("<"):
            obj = obj[1:-1]
        triples.append((head, rel, obj))
    return triples


def parse_tsv_triples(text):
    """Parse ``head<TAB>relation<TAB>tail`` lines into string tuples."""
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(
                f"expected 3 tab-separated fields, got {len(parts)}", line=lineno
            )
        triples.append(tuple(parts))
    return triples


def build_graph(raw_triples) -> KnowledgeGraph:
    """Intern a list of raw (head, relation, tail) string triples.

    Ids are assigned in first-appearance order (heads and tails share one
    table); duplicate statements are dropped.
    """
    if not raw_triples:
        raise KgrecError("cannot build a graph from an empty triple list")
    entities, relations = [], []
    eidx, ridx = {}, {}
    seen = set()
    triples = []

    def intern(table, index, key):
        if key not in index:
            index[key] = len(table)
            table.append(key)
        return index[key]

    for h, r, t in raw_triples:
        hi = intern(entities, eidx, h)
        ri = intern(relations, ridx, r)
        ti = intern(entities, eidx, t)
        if (hi, ri, ti) in seen:
            continue
        seen.add((hi, ri, ti))
        triples.append(Triple(hi, ri, ti))
    return KnowledgeGraph(entities, relations, triples)


def load_graph(path) -> KnowledgeGraph:
    """Load a graph from an ``.nt`` or TSV triple file, by extension."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".nt"):
        return build_graph(parse_ntriples(text))
    return build_graph(parse_tsv_triples(text))


def split_edges(graph: KnowledgeGraph, ratios=(0.8, 0.1, 0.1), seed=0) -> DataSplit:
    """Deterministically partition edges into train/val/test.

    Sizes are floor(r0*N) / floor(r1*N) / remainder. A greedy repair pass then
    swaps edges between train and the held-out sets so that every entity with
    degree >= 1 appears in at least one training triple (transductive models
    cannot embed entities missing from training). Entities that cannot be
    covered are reported in ``uncovered`` rather than raising.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise KgrecError(f"ratios must be three non-negative values summing to 1, got {ratios}")
    n = graph.triple_count
    if n < 3:
        raise KgrecError("graph must have at least 3 edges to split")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = math.floor(ratios[0] * n)
    n_val = math.floor(ratios[1] * n)
    train = [graph.triples[i] for i in order[:n_train]]
    val = [graph.triples[i] for i in order[n_train:n_train + n_val]]
    test = [graph.triples[i] for i in order[n_train + n_val:]]

    # Repair pass: cover every non-isolated entity in train via swaps that
    # keep the three set sizes fixed and never uncover a covered entity.
    cover = np.zeros(graph.entity_count, dtype=np.int64)
    for t in train:
        cover[t.head] += 1
        cover[t.tail] += 1
    uncovered = []
    for e in range(graph.entity_count):
        if cover[e] > 0 or graph.degree(e) == 0:
            continue
        swapped = False
        for held, name in ((val, "val"), (test, "test")):
            for i, cand in enumerate(held):
                if cand.head != e and cand.tail != e:
                    continue
                for j, out in enumerate(train):
                    # removing `out` must keep its endpoints covered
                    if cover[out.head] < 2 or cover[out.tail] < 2:
                        continue
                    if out.head == out.tail and cover[out.head] < 3:
                        continue
                    train[j], held[i] = cand, out
                    cover[out.head] -= 1
                    cover[out.tail] -= 1
                    cover[cand.head] += 1
                    cover[cand.tail] += 1
                    swapped = True
                    break
                if swapped:
                    break
            if swapped:
                break
        if not swapped:
            uncovered.append(e)
    return DataSplit(train=train, val=val, test=test, seed=seed,
                     ratios=tuple(ratios), uncovered=uncovered)


def sample_negatives(graph: KnowledgeGraph, positives, per_positive_ratio=1,
                     seed=0) -> NegativeSampleSet:
    """Corrupt head or tail (fair coin) of each positive into false triples.

    Replacement entities are drawn uniformly and resampled until the candidate
    is absent from the graph's full true edge set, with a 100-attempt cap per
    negative slot.
    """
    if per_positive_ratio < 1:
        raise KgrecError("per_positive_ratio must be >= 1")
    rng = np.random.default_rng(seed)
    n_ent = graph.entity_count
    negatives = []
    for pos in positives:
        for _ in range(per_positive_ratio):
            corrupt_head = bool(rng.integers(2))
            for attempt in range(100):
                repl = int(rng.integers(n_ent))
                if corrupt_head:
                    cand = (repl, pos.relation, pos.tail)
                else:
                    cand = (pos.head, pos.relation, repl)
                if cand not in graph.triple_set:
                    negatives.append(Triple(*cand))
                    break
            else:
                h, r, t = graph.iri_triple(pos)
                raise KgrecError(
                    f"negative sampling saturated for positive ({h}, {r}, {t}): "
                    f"no valid corruption found in 100 attempts"
                )
    return NegativeSampleSet(negatives=negatives,
                             per_positive_ratio=per_positive_ratio, seed=seed)


def write_graph_tsv(graph: KnowledgeGraph, path):
    """Dump the interned graph as a TSV triple file (IRIs, one edge per line)."""
    with open(path, "w", encoding="utf-8") as f:
        for t in graph.triples:
            h, r, o = graph.iri_triple(t)
            f.write(f"{h}\t{r}\t{o}\n")


def write_split(split: DataSplit, graph: KnowledgeGraph, out_dir):
    """Write train/valid/test TSVs plus a provenance line with seed and ratios."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, triples in (("train", split.train), ("valid", split.val), ("test", split.test)):
        with open(out / f"{name}.tsv", "w", encoding="utf-8") as f:
            for t in triples:
                h, r, o = graph.iri_triple(t)
                f.write(f"{h}\t{r}\t{o}\n")
    ratios = ",".join(repr(r) for r in split.ratios)
    (out / "split.meta").write_text(f"seed={split.seed} ratios={ratios}\n", encoding="utf-8")


def read_split(graph: KnowledgeGraph, split_dir) -> DataSplit:
    """Load a split manifest back against an interned graph."""
    split_dir = Path(split_dir)

    def load(name):
        text = (split_dir / f"{name}.tsv").read_text(encoding="utf-8")
        triples = []
        for h, r, o in parse_tsv_triples(text):
            triples.append(Triple(graph.entity_index[h], graph.relation_index[r],
                                  graph.entity_index[o]))
        return triples

    meta = (split_dir / "split.meta").read_text(encoding="utf-8").split()
    seed = int(meta[0].split("=", 1)[1])
    ratios = tuple(float(x) for x in meta[1].split("=", 1)[1].split(","))
    return DataSplit(train=load("train"), val=load("valid"), test=load("test"),
                     seed=seed, ratios=ratios)
