"""Labeled embedding datasets consumed by the classifier suite."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ContractError, DatasetError


@dataclass(frozen=True)
class LabeledDataset:
    """Embeddings with student labels and a canonical class ordering.

    ``class_set`` fixes label indexing and every deterministic tie rule
    downstream (votes, argmax over decision scores).
    """

    X: np.ndarray  # (n, d) float64
    labels: tuple[str, ...]
    class_set: tuple[str, ...]
    y: np.ndarray = field(init=False, repr=False)  # (n,) int indices into class_set

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ContractError(f"X must be 2-d, got shape {X.shape}")
        if X.shape[0] != len(self.labels):
            raise ContractError(f"{X.shape[0]} rows but {len(self.labels)} labels")
        if len(set(self.class_set)) != len(self.class_set):
            raise ContractError("class_set contains duplicates")
        index = {c: i for i, c in enumerate(self.class_set)}
        try:
            y = np.array([index[label] for label in self.labels], dtype=np.int64)
        except KeyError as exc:
            raise ContractError(f"label {exc.args[0]!r} not in class_set") from exc
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def class_counts(self) -> dict[str, int]:
        return {c: int(np.sum(self.y == i)) for i, c in enumerate(self.class_set)}

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        """Row subset; class_set keeps only classes present, order preserved."""
        indices = np.asarray(indices, dtype=np.int64)
        labels = tuple(self.labels[i] for i in indices)
        present = set(labels)
        return LabeledDataset(
            X=self.X[indices],
            labels=labels,
            class_set=tuple(c for c in self.class_set if c in present),
        )


def from_pairs(pairs: Sequence[tuple[np.ndarray, str]]) -> LabeledDataset:
    """Build a dataset from (embedding, label) pairs; class order = first seen."""
    if not pairs:
        raise DatasetError("empty dataset")
    X = np.vstack([np.asarray(v, dtype=np.float64) for v, _ in pairs])
    labels = tuple(label for _, label in pairs)
    seen: dict[str, None] = {}
    for label in labels:
        seen.setdefault(label)
    return LabeledDataset(X=X, labels=labels, class_set=tuple(seen))


def require_trainable(dataset: LabeledDataset) -> None:
    counts = dataset.class_counts()
    if len(counts) < 2:
        raise DatasetError(f"training needs at least 2 classes, got {len(counts)}")
    empty = [c for c, n in counts.items() if n == 0]
    if empty:
        raise DatasetError(f"classes with no examples: {empty}")
