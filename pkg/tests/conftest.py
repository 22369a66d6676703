import numpy as np
import pytest

from kgrec.kg import build_graph


@pytest.fixture
def toy_graph():
    """Five entities, two relations, a mix of directions and a leaf."""
    return build_graph([
        ("urn:e:a", "urn:r:likes", "urn:e:b"),
        ("urn:e:b", "urn:r:likes", "urn:e:c"),
        ("urn:e:c", "urn:r:cites", "urn:e:a"),
        ("urn:e:a", "urn:r:cites", "urn:e:d"),
        ("urn:e:d", "urn:r:likes", "urn:e:e"),
        ("urn:e:e", "urn:r:cites", "urn:e:b"),
    ])


def random_raw_triples(rng, n_entities=12, n_relations=3, n_triples=40):
    """Raw string triples for a random multigraph (may contain duplicates)."""
    triples = []
    for _ in range(n_triples):
        h = int(rng.integers(n_entities))
        t = int(rng.integers(n_entities))
        r = int(rng.integers(n_relations))
        triples.append((f"urn:e:{h}", f"urn:r:{r}", f"urn:e:{t}"))
    return triples
