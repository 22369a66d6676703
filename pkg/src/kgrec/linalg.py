"""Small dense linear-algebra helpers and a finite-difference gradient checker.

Everything is float64: gradient checks at 1e-4 relative tolerance are not
reliable in single precision, and the graphs are small enough not to care.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kgrec.errors import KgrecError


@dataclass
class GradCheckReport:
    max_relative_error: float
    worst_index: int
    epsilon: float


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise KgrecError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    z = np.exp(x[~pos])
    out[~pos] = z / (1.0 + z)
    return out


_ELEMENTWISE = {"relu": relu, "sigmoid": sigmoid}


def elementwise(op, x):
    if op not in _ELEMENTWISE:
        raise KgrecError(f"unknown elementwise op {op!r}; choose from {sorted(_ELEMENTWISE)}")
    return _ELEMENTWISE[op](x)


def finite_difference_check(f, x, analytic_grad, epsilon=1e-5,
                            coords=None) -> GradCheckReport:
    """Compare an analytic gradient of scalar ``f`` against central differences.

    Relative error per coordinate uses denominator max(|analytic|, |numeric|,
    1e-8). ``coords`` restricts the check to a subset of flat indices (the
    default checks every coordinate).
    """
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(analytic_grad, dtype=np.float64).ravel()
    if analytic.size != x.size:
        raise KgrecError("analytic gradient size does not match point size")
    if not epsilon > 0:
        raise KgrecError("epsilon must be > 0")
    flat = x.ravel().copy()
    if coords is None:
        coords = range(flat.size)
    worst_err, worst_idx = 0.0, -1
    for i in coords:
        orig = flat[i]
        flat[i] = orig + epsilon
        fp = f(flat.reshape(x.shape))
        flat[i] = orig - epsilon
        fm = f(flat.reshape(x.shape))
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise KgrecError(f"non-finite function value near coordinate {i}")
        numeric = (fp - fm) / (2.0 * epsilon)
        denom = max(abs(analytic[i]), abs(numeric), 1e-8)
        err = abs(analytic[i] - numeric) / denom
        if err > worst_err:
            worst_err, worst_idx = err, i
    return GradCheckReport(max_relative_error=worst_err, worst_index=worst_idx,
                           epsilon=epsilon)
