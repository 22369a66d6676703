"""Knowledge-graph entity embeddings with link-prediction and ranking evaluation.

Four embedding paradigms over a multi-relational triple store:

- uniform random walks + skip-gram (``deepwalk``)
- relation-weighted random walks + skip-gram (``brw``)
- concatenation of the two (``hybrid``)
- relational graph convolution with a DistMult decoder (``rgcn``)

plus a deterministic pipeline (ingest / split / train / eval / recommend)
driven by the ``kgrec`` command-line tool.
"""

__version__ = "0.1.0"

from kgrec.kg import KnowledgeGraph, Triple, build_graph, parse_ntriples, parse_tsv_triples
from kgrec.embeddings import EmbeddingTable

__all__ = [
    "KnowledgeGraph",
    "Triple",
    "build_graph",
    "parse_ntriples",
    "parse_tsv_triples",
    "EmbeddingTable",
]
