"""Small log-domain helpers used by the engine and the oracle."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "CONSERVATIVE_INFLATION",
    "RESOLUTION_FLOOR",
    "log_diff_exp",
    "logmeanexp",
    "logsumexp",
    "sorted_logsumexp",
]

# Floor on the log-domain gap, as a fraction of the operand magnitude: gaps
# this small are indistinguishable from accumulated rounding in the operands,
# so the subtraction reports at least this much difference rather than zero.
RESOLUTION_FLOOR = 1e-12

# Upward inflation applied to log-domain differences that feed an upper bound,
# so rounding in the subtraction can never turn the bound invalid.
CONSERVATIVE_INFLATION = 1e-9


def logmeanexp(a: np.ndarray, axis: int | None = None) -> np.ndarray | float:
    """log(mean(exp(a))) along an axis, stable for large-magnitude entries."""
    a = np.asarray(a, dtype=float)
    n = a.size if axis is None else a.shape[axis]
    return logsumexp(a, axis=axis) - np.log(n)


def sorted_logsumexp(a: np.ndarray) -> float:
    """log(sum(exp(a))) with the exponents accumulated in ascending order.

    Used by the enumeration oracle, where summation order is pinned down so
    the reference value is reproducible bit-for-bit across runs.
    """
    a = np.sort(np.asarray(a, dtype=float), axis=None)
    if a.size == 0:
        return -np.inf
    hi = a[-1]
    if np.isneginf(hi):
        return -np.inf
    acc = 0.0
    for v in a:
        acc += float(np.exp(v - hi))
    return float(hi + np.log(acc))


def log_diff_exp(log_a: np.ndarray, log_b: np.ndarray) -> np.ndarray:
    """log(exp(log_a) - exp(log_b)) for log_a >= log_b, elementwise.

    The result never under-reports the difference: the gap between the two
    logs is floored at the rounding resolution of the operands (gaps smaller
    than RESOLUTION_FLOOR relative to the operand magnitude cannot be told
    apart from accumulated rounding, so the floor is the honest answer), and
    the difference is further inflated by CONSERVATIVE_INFLATION. Both guards
    keep downstream upper bounds valid when log_b nearly cancels log_a.
    """
    log_a = np.asarray(log_a, dtype=float)
    log_b = np.asarray(log_b, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        floor = RESOLUTION_FLOOR * np.maximum(np.abs(log_a), 1.0)
        gap = np.maximum(log_a - log_b, 0.0) + floor
        # -expm1(-gap) = 1 - exp(-gap), accurate for small gaps
        body = np.log(-np.expm1(-gap))
        out = log_a + body + np.log1p(CONSERVATIVE_INFLATION)
    # b = 0 (log_b = -inf) means the difference is exactly a
    out = np.where(np.isneginf(log_b), log_a, out)
    return out
