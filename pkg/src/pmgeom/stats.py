"""Correlation and class-accuracy bias statistics."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, UndefinedCorrelationError


def _as_vector(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1 or a.size < 1:
        raise InvalidInputError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length sequences.

    Raises UndefinedCorrelationError if either sequence is constant.
    """
    a = _as_vector(x, "x")
    b = _as_vector(y, "y")
    if a.size != b.size:
        raise InvalidInputError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise InvalidInputError("need at least 2 samples")
    da = a - a.mean()
    db = b - b.mean()
    sa = np.sqrt(np.sum(da * da))
    sb = np.sqrt(np.sum(db * db))
    if sa == 0.0 or sb == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant sequence")
    r = float(np.sum(da * db) / (sa * sb))
    return min(1.0, max(-1.0, r))


def _ranks(a: np.ndarray) -> np.ndarray:
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size)
    i = 0
    s = a[order]
    while i < a.size:
        j = i
        while j < a.size and s[j] == s[i]:
            j += 1
        ranks[order[i:j]] = (i + j - 1) / 2.0
        i = j
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation (Pearson of tie-averaged ranks)."""
    a = _as_vector(x, "x")
    b = _as_vector(y, "y")
    if a.size != b.size:
        raise InvalidInputError(f"length mismatch: {a.size} vs {b.size}")
    return pearson(_ranks(a), _ranks(b))


def accuracy_variance(acc) -> float:
    """Population variance of per-class accuracies (the Fig-1 bias measure)."""
    a = _as_vector(acc, "acc")
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise InvalidInputError("accuracies must lie in [0, 1]")
    return float(np.mean((a - a.mean()) ** 2))


def accuracy_bias_ratio(acc, eps: float = 1e-12) -> float:
    """max(max_c A_c / (min_c A_c + eps) - 1, 0).

    Zero when all class accuracies are identical; eps keeps the ratio
    finite when the worst class has accuracy 0.
    """
    a = _as_vector(acc, "acc")
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise InvalidInputError("accuracies must lie in [0, 1]")
    if eps <= 0.0:
        raise InvalidInputError("eps must be positive")
    return max(float(a.max() / (a.min() + eps)) - 1.0, 0.0)
