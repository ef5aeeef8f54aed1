"""Exact k-nearest-neighbor classifier on standardized embeddings.

Training is storage.  Prediction is a full Euclidean scan with a stable
distance sort, so equal distances resolve to the lower training index.
Vote ties resolve to the class owning the single nearest neighbor among
the tied classes; any residual tie falls back to class_set order.
"""
from __future__ import annotations

import numpy as np

from ..errors import SpecError


class KnnClassifier:
    def __init__(self, k: int):
        if k < 1:
            raise SpecError(f"k must be >= 1, got {k}")
        self.k = k
        self.X: np.ndarray | None = None
        self.y: np.ndarray | None = None
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "KnnClassifier":
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        return self

    def predict_one(self, x: np.ndarray) -> int:
        d2 = np.sum((self.X - x) ** 2, axis=1)
        order = np.argsort(d2, kind="stable")
        top = order[: min(self.k, order.shape[0])]
        votes = np.bincount(self.y[top], minlength=self.n_classes)
        best = votes.max()
        tied = np.nonzero(votes == best)[0]
        if tied.shape[0] == 1:
            return int(tied[0])
        tied_set = set(int(c) for c in tied)
        for i in top:
            if int(self.y[i]) in tied_set:
                return int(self.y[i])
        return int(tied[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(x) for x in np.asarray(X, dtype=np.float64)], dtype=np.int64)

    def to_json(self) -> dict:
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist(), "n_classes": self.n_classes}

    @staticmethod
    def from_json(obj: dict) -> "KnnClassifier":
        model = KnnClassifier(obj["k"])
        return model.fit(np.array(obj["X"]), np.array(obj["y"]), obj["n_classes"])
