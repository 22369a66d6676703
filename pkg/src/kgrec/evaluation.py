"""Link-prediction AUC and recommendation-ranking metrics, plus report output.

Hits@K is per-query binary (did any relevant entity make the top K), nDCG
uses binary gains with the log2(i+1) discount, and AUC is the Mann-Whitney
rank-sum form with ties counted 0.5.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from kgrec.embeddings import EmbeddingTable, rank_candidates
from kgrec.errors import KgrecError

REPORT_COLUMNS = ("Model", "AUC", "Hits@10", "Hits@5", "MRR", "nDCG@10")


@dataclass
class AucReport:
    auc: float
    positives: int
    negatives: int


@dataclass
class QueryRecord:
    query: str
    hits: dict          # k -> 0 or 1
    reciprocal_rank: float
    ndcg: dict          # k -> value


@dataclass
class RankingReport:
    ks: tuple
    per_query: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)  # "hits@k" / "mrr" / "ndcg@k"


def auc(positive_scores, negative_scores) -> AucReport:
    """Fraction of (positive, negative) score pairs ranked correctly."""
    pos = np.asarray(positive_scores, dtype=np.float64)
    neg = np.asarray(negative_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise KgrecError("AUC requires non-empty positive and negative score sets")
    ranks = rankdata(np.concatenate([pos, neg]))  # average ranks on ties
    rank_sum = float(ranks[: pos.size].sum())
    value = (rank_sum - pos.size * (pos.size + 1) / 2.0) / (pos.size * neg.size)
    return AucReport(auc=value, positives=pos.size, negatives=neg.size)


def hits_at_k(ranked_entities, relevant, k):
    """1 iff any relevant entity appears within the first k positions."""
    if k < 1:
        raise KgrecError("k must be >= 1")
    return 1 if any(e in relevant for e in ranked_entities[:k]) else 0


def mrr(ranked_entities, relevant):
    """Reciprocal rank of the first relevant entity; 0 when none appear."""
    for rank, e in enumerate(ranked_entities, start=1):
        if e in relevant:
            return 1.0 / rank
    return 0.0


def ndcg_at_k(ranked_entities, relevant, k):
    """Binary-gain nDCG with the log2(i+1) discount."""
    if k < 1:
        raise KgrecError("k must be >= 1")
    if not relevant:
        raise KgrecError("relevant set must be non-empty")
    dcg = sum(1.0 / math.log2(i + 1)
              for i, e in enumerate(ranked_entities[:k], start=1) if e in relevant)
    idcg = sum(1.0 / math.log2(i + 1)
               for i in range(1, min(len(relevant), k) + 1))
    return dcg / idcg


def load_ground_truth(path, known_entities=None):
    """Read ``query<TAB>relevant`` pairs; repeated queries union their sets."""
    truth = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                 start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise KgrecError(f"ground truth line {lineno}: expected 2 fields")
        query, rel = parts
        if known_entities is not None:
            for e in (query, rel):
                if e not in known_entities:
                    raise KgrecError(f"ground truth line {lineno}: unknown entity {e}")
        truth.setdefault(query, set()).add(rel)
    if not truth:
        raise KgrecError(f"ground truth file {path} is empty")
    return truth


def evaluate_ranking(table: EmbeddingTable, ground_truth, candidates,
                     ks=(10, 5)) -> RankingReport:
    """Rank candidates per query by cosine and score all three metrics."""
    missing = sorted(q for q in ground_truth if q not in table)
    if missing:
        raise KgrecError(f"queries missing from embedding table: {missing}")
    report = RankingReport(ks=tuple(ks))
    for query in sorted(ground_truth):
        relevant = ground_truth[query]
        if not (relevant & set(candidates)):
            warnings.warn(f"query {query}: no relevant entity in the candidate set; "
                          f"all metrics score 0")
        ranked = rank_candidates(table, query, candidates).entities()
        report.per_query.append(QueryRecord(
            query=query,
            hits={k: hits_at_k(ranked, relevant, k) for k in ks},
            reciprocal_rank=mrr(ranked, relevant),
            ndcg={k: ndcg_at_k(ranked, relevant, k) for k in ks},
        ))
    n = len(report.per_query)
    for k in ks:
        report.aggregates[f"hits@{k}"] = sum(r.hits[k] for r in report.per_query) / n
        report.aggregates[f"ndcg@{k}"] = sum(r.ndcg[k] for r in report.per_query) / n
    report.aggregates["mrr"] = sum(r.reciprocal_rank for r in report.per_query) / n
    return report


def evaluate_link_prediction(scorer, positives, negatives) -> AucReport:
    """Score both triple sets with ``scorer(triple)`` and report AUC."""
    pos = [scorer(t) for t in positives]
    neg = [scorer(t) for t in negatives]
    return auc(pos, neg)


def emit_report(results):
    """Render named model results in the standard comparison-table layout.

    ``results``: ordered mapping model name -> (AucReport, RankingReport).
    Returns (markdown, csv); values at 4 decimals, per-column maxima bolded
    in the markdown.
    """
    if not results:
        raise KgrecError("no model results to report")
    rows = []
    for name, (auc_report, ranking) in results.items():
        rows.append((name, auc_report.auc,
                     ranking.aggregates["hits@10"], ranking.aggregates["hits@5"],
                     ranking.aggregates["mrr"], ranking.aggregates["ndcg@10"]))
    maxima = [max(r[c] for r in rows) for c in range(1, 6)]

    csv_lines = [",".join(REPORT_COLUMNS)]
    for row in rows:
        csv_lines.append(row[0] + "," + ",".join(f"{v:.4f}" for v in row[1:]))

    md_lines = ["| " + " | ".join(REPORT_COLUMNS) + " |",
                "|" + "---|" * len(REPORT_COLUMNS)]
    for row in rows:
        cells = [row[0]]
        for v, m in zip(row[1:], maxima):
            text = f"{v:.4f}"
            cells.append(f"**{text}**" if v == m else text)
        md_lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(md_lines) + "\n", "\n".join(csv_lines) + "\n"
