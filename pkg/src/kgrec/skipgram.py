"""Skip-gram with negative sampling, trained on walk corpora.

Single-threaded sequential SGD by contract: the corpora are small, and
determinism (same corpus + config -> identical table) is worth more here than
throughput. The inner update loop lives in ``_kernels.sgns_epoch``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kgrec import _kernels
from kgrec.embeddings import EmbeddingTable
from kgrec.errors import DivergenceError, KgrecError
from kgrec.linalg import sigmoid

LR_FLOOR_FRACTION = 1e-4  # linear decay target as a fraction of the initial rate
NOISE_EXPONENT = 0.75


@dataclass
class SkipGramConfig:
    dimension: int = 64
    window: int = 5
    negatives_per_pair: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 0
    noise_exponent: float = NOISE_EXPONENT

    def __post_init__(self):
        if self.dimension < 2:
            raise KgrecError("dimension must be >= 2")
        if not self.learning_rate > 0:
            raise KgrecError("learning_rate must be > 0")
        if self.window < 1 or self.negatives_per_pair < 1:
            raise KgrecError("window and negatives_per_pair must be >= 1")


def extract_pairs(corpus, window):
    """Yield (center, context) for every position pair within the window."""
    if window < 1:
        raise KgrecError("window must be >= 1")
    for walk in corpus:
        n = len(walk)
        for i in range(n):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if j != i:
                    yield int(walk[i]), int(walk[j])


def noise_distribution(corpus, vocab_size, exponent=NOISE_EXPONENT):
    """Unigram^exponent noise distribution over token ids."""
    counts = np.zeros(vocab_size, dtype=np.float64)
    total = 0
    for walk in corpus:
        for tok in walk:
            counts[tok] += 1
            total += 1
    if total == 0:
        raise KgrecError("corpus is empty")
    weights = counts ** exponent
    return weights / weights.sum()


def pair_loss(vec_center, vec_context, vec_negatives):
    """Loss of one training pair: -log s(u.v+) - sum_k log s(-u.v-k)."""
    u = np.asarray(vec_center, dtype=np.float64)
    pos = float(np.dot(u, vec_context))
    negs = np.asarray(vec_negatives, dtype=np.float64) @ u
    # -log sigmoid(x) = softplus(-x), computed stably
    softplus = lambda x: np.logaddexp(0.0, -x)
    return float(softplus(pos) + np.sum(softplus(-negs)))


def pair_gradients(vec_center, vec_context, vec_negatives):
    """Analytic gradients of ``pair_loss`` wrt (center, context, negatives)."""
    u = np.asarray(vec_center, dtype=np.float64)
    v = np.asarray(vec_context, dtype=np.float64)
    negs = np.asarray(vec_negatives, dtype=np.float64)
    g_pos = sigmoid(np.dot(u, v)) - 1.0
    g_negs = sigmoid(negs @ u)            # sigmoid(u.v-),  label 0
    grad_u = g_pos * v + g_negs @ negs
    grad_v = g_pos * u
    grad_negs = g_negs[:, None] * u[None, :]
    return grad_u, grad_v, grad_negs


def train_skipgram(corpus, config: SkipGramConfig, vocab) -> EmbeddingTable:
    """Train SGNS over a walk corpus; returns the input-vector table.

    ``vocab`` lists the entity IRIs indexed by corpus token id. Negatives are
    drawn from the unigram^0.75 noise distribution; the learning rate decays
    linearly to 1e-4 of its initial value across all updates.
    """
    walks = list(corpus)
    if not walks:
        raise KgrecError("corpus is empty")
    vocab = list(vocab)
    n_vocab = len(vocab)
    dim = config.dimension

    rng = np.random.default_rng(config.seed)
    span = 0.5 / dim
    vec_in = rng.uniform(-span, span, size=(n_vocab, dim))
    vec_out = np.zeros((n_vocab, dim), dtype=np.float64)

    pairs = np.fromiter(
        (x for pair in extract_pairs(walks, config.window) for x in pair),
        dtype=np.int64,
    ).reshape(-1, 2)
    if config.epochs == 0 or len(pairs) == 0:
        return EmbeddingTable(vocab, vec_in, model="sgns")
    centers = np.ascontiguousarray(pairs[:, 0])
    contexts = np.ascontiguousarray(pairs[:, 1])

    noise_cdf = np.cumsum(noise_distribution(walks, n_vocab, config.noise_exponent))
    n_pairs = len(centers)
    total_steps = n_pairs * config.epochs
    lr_floor = config.learning_rate * LR_FLOOR_FRACTION

    for epoch in range(config.epochs):
        order = rng.permutation(n_pairs)
        negatives = np.searchsorted(
            noise_cdf, rng.random((n_pairs, config.negatives_per_pair))
        ).astype(np.int64)
        np.clip(negatives, 0, n_vocab - 1, out=negatives)  # guard cdf round-off
        loss = _kernels.sgns_epoch(
            vec_in, vec_out, centers[order], contexts[order], negatives,
            config.learning_rate, lr_floor, epoch * n_pairs, total_steps,
        )
        if not np.isfinite(loss) or not np.all(np.isfinite(vec_in)):
            raise DivergenceError(
                f"skip-gram training diverged at epoch {epoch} "
                f"(learning_rate={config.learning_rate})"
            )
    return EmbeddingTable(vocab, vec_in, model="sgns")
