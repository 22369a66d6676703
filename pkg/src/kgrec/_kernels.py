"""Hot numeric inner loops, JIT-compiled with numba when available.

Set ``KGREC_NO_NUMBA=1`` to run the identical functions as plain Python over
numpy arrays (slow, dependency-light). Both paths execute the same source, so
results agree to the last bit; the benchmark under ``benchmarks/`` compares
their throughput.
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_ENABLED = os.environ.get("KGREC_NO_NUMBA", "").lower() not in ("1", "true", "yes")

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda func: func


@njit(cache=True)
def walk_batch(starts, uniforms, indptr, nbrs, edge_weight, out, lengths):
    """Generate one walk per row of ``uniforms``.

    ``starts[w]`` is the start node of walk ``w``; ``uniforms[w, s]`` drives
    step ``s``. Incident edges of node ``u`` live in
    ``nbrs[indptr[u]:indptr[u+1]]`` with sampling weights ``edge_weight`` over
    the same slots (uniform walking passes all-ones). Walks stop early only at
    isolated nodes. ``out`` is (n_walks, max_len); ``lengths`` receives the
    realized walk lengths.
    """
    n_walks, n_steps = uniforms.shape
    for w in range(n_walks):
        node = starts[w]
        out[w, 0] = node
        length = 1
        for s in range(n_steps):
            lo = indptr[node]
            hi = indptr[node + 1]
            if hi == lo:
                break
            total = 0.0
            for e in range(lo, hi):
                total += edge_weight[e]
            target = uniforms[w, s] * total
            acc = 0.0
            chosen = hi - 1
            for e in range(lo, hi):
                acc += edge_weight[e]
                if target < acc:
                    chosen = e
                    break
            node = nbrs[chosen]
            out[w, length] = node
            length += 1
        lengths[w] = length


@njit(cache=True)
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@njit(cache=True)
def _log_sigmoid(x):
    # -softplus(-x), stable for large |x|
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit(cache=True)
def sgns_epoch(vec_in, vec_out, centers, contexts, negatives,
               lr0, lr_floor, step_offset, total_steps):
    """One epoch of sequential skip-gram negative-sampling SGD.

    ``vec_in``/``vec_out`` are the (vocab, dim) input and context tables,
    updated in place. Pair ``i`` trains (centers[i], contexts[i]) against
    ``negatives[i, :]``. The learning rate decays linearly from ``lr0`` to
    ``lr_floor`` over ``total_steps`` global pair updates, with this call
    covering steps ``step_offset ..``. Returns the summed pair loss.
    """
    n_pairs = centers.shape[0]
    n_neg = negatives.shape[1]
    dim = vec_in.shape[1]
    grad = np.empty(dim, dtype=np.float64)
    loss = 0.0
    for i in range(n_pairs):
        frac = (step_offset + i) / total_steps
        lr = lr0 + (lr_floor - lr0) * frac
        c = centers[i]
        for d in range(dim):
            grad[d] = 0.0
        for k in range(n_neg + 1):
            if k == 0:
                t = contexts[i]
                label = 1.0
            else:
                t = negatives[i, k - 1]
                label = 0.0
            dot = 0.0
            for d in range(dim):
                dot += vec_in[c, d] * vec_out[t, d]
            if label == 1.0:
                loss -= _log_sigmoid(dot)
            else:
                loss -= _log_sigmoid(-dot)
            g = (label - _sigmoid(dot)) * lr
            for d in range(dim):
                grad[d] += g * vec_out[t, d]
                vec_out[t, d] += g * vec_in[c, d]
        for d in range(dim):
            vec_in[c, d] += grad[d]
    return loss
