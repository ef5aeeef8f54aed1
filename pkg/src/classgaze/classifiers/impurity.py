"""Split impurity measures for tree induction."""
from __future__ import annotations

from typing import Mapping

import numpy as np

from ..errors import ContractError


def gini_impurity(class_counts: Mapping[str, int]) -> float:
    """1 - sum p_i^2 over class probabilities."""
    total = sum(class_counts.values())
    if total <= 0:
        raise ContractError("total count must be positive")
    return 1.0 - sum((c / total) ** 2 for c in class_counts.values())


def entropy_impurity(class_counts: Mapping[str, int]) -> float:
    """-sum p_i log2 p_i, with 0 log 0 = 0."""
    total = sum(class_counts.values())
    if total <= 0:
        raise ContractError("total count must be positive")
    out = 0.0
    for c in class_counts.values():
        if c > 0:
            p = c / total
            out -= p * np.log2(p)
    return float(out)


def gini_from_counts(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Vectorized gini for a (k, n_classes) count matrix with row totals."""
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / totals[:, None]
        out = 1.0 - np.sum(p * p, axis=1)
    return np.where(totals > 0, out, 0.0)


def entropy_from_counts(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Vectorized entropy for a (k, n_classes) count matrix with row totals."""
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / totals[:, None]
        logp = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
        out = -np.sum(p * logp, axis=1)
    return np.where(totals > 0, out, 0.0)
