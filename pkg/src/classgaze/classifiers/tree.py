"""CART induction over continuous features.

One builder serves both the classification tree (gini/entropy impurity,
majority leaves) and the regression tree used as the boosting base learner
(variance impurity, mean leaves).  Splits are binary, at midpoints between
consecutive distinct feature values, chosen by maximum impurity decrease;
the first candidate encountered wins ties, which together with seeded
feature subsampling makes training fully deterministic.  A zero-gain split
is still taken when a valid candidate exists, so conflict-free training
data is always driven to pure leaves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..errors import SpecError
from .impurity import entropy_from_counts, gini_from_counts


@dataclass
class TreeNode:
    # leaf when feature is None
    value: float
    feature: Optional[int] = None
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    def to_json(self) -> dict:
        if self.feature is None:
            return {"v": self.value}
        return {
            "v": self.value,
            "f": self.feature,
            "t": self.threshold,
            "l": self.left.to_json(),
            "r": self.right.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "TreeNode":
        if "f" not in obj:
            return TreeNode(value=obj["v"])
        return TreeNode(
            value=obj["v"],
            feature=obj["f"],
            threshold=obj["t"],
            left=TreeNode.from_json(obj["l"]),
            right=TreeNode.from_json(obj["r"]),
        )


def resolve_max_features(max_features: Union[str, int, None], n_features: int) -> Optional[int]:
    """Candidate features per split; floor rule for sqrt/log2 (512 -> 22, 9)."""
    if max_features is None:
        return None
    if isinstance(max_features, int):
        if not (1 <= max_features <= n_features):
            raise SpecError(f"max_features {max_features} outside [1, {n_features}]")
        return max_features
    if max_features == "sqrt":
        return max(1, math.floor(math.sqrt(n_features)))
    if max_features == "log2":
        return max(1, math.floor(math.log2(n_features)))
    raise SpecError(f"unknown max_features {max_features!r}")


class _ClassificationTarget:
    def __init__(self, y: np.ndarray, n_classes: int):
        self.onehot = np.zeros((y.shape[0], n_classes))
        self.onehot[np.arange(y.shape[0]), y] = 1.0
        self.y = y
        self.n_classes = n_classes

    def impurity_fn(self, criterion: str):
        if criterion == "gini":
            return gini_from_counts
        if criterion == "entropy":
            return entropy_from_counts
        raise SpecError(f"unknown criterion {criterion!r}")


def _classification_split_scores(onehot_sorted, impurity, cut_sizes, n):
    left_counts = np.cumsum(onehot_sorted, axis=0)[cut_sizes - 1]
    total = onehot_sorted.sum(axis=0)
    right_counts = total[None, :] - left_counts
    nl = cut_sizes.astype(np.float64)
    nr = n - nl
    return (nl * impurity(left_counts, nl) + nr * impurity(right_counts, nr)) / n


def _regression_split_scores(y_sorted, cut_sizes, n):
    csum = np.cumsum(y_sorted)
    csum2 = np.cumsum(y_sorted * y_sorted)
    nl = cut_sizes.astype(np.float64)
    nr = n - nl
    sum_l = csum[cut_sizes - 1]
    sum2_l = csum2[cut_sizes - 1]
    sum_r = csum[-1] - sum_l
    sum2_r = csum2[-1] - sum2_l
    sse_l = sum2_l - sum_l * sum_l / nl
    sse_r = sum2_r - sum_r * sum_r / nr
    return (sse_l + sse_r) / n


def _node_impurity_classification(y: np.ndarray, n_classes: int, impurity) -> float:
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    return float(impurity(counts[None, :], np.array([float(y.shape[0])]))[0])


def _node_impurity_regression(y: np.ndarray) -> float:
    return float(np.var(y))


def _majority(y: np.ndarray, n_classes: int) -> float:
    # argmax over counts breaks ties toward the lowest class index
    return float(np.argmax(np.bincount(y, minlength=n_classes)))


class CartTree:
    """Greedy best-first CART, classification or regression.

    Parameters mirror the grid hyperparameters: ``max_depth`` (None =
    unbounded), ``min_samples_leaf``, ``min_samples_split``,
    ``max_features`` (None / "sqrt" / "log2" / int), ``criterion``
    ("gini" / "entropy" for classification, ignored for regression).
    """

    def __init__(
        self,
        *,
        task: str = "classification",
        criterion: str = "gini",
        max_depth: Optional[int] = None,
        min_samples_leaf: int = 1,
        min_samples_split: int = 2,
        max_features: Union[str, int, None] = None,
        seed: int = 0,
    ):
        if task not in ("classification", "regression"):
            raise SpecError(f"unknown task {task!r}")
        if min_samples_leaf < 1 or min_samples_split < 2:
            raise SpecError("min_samples_leaf >= 1 and min_samples_split >= 2 required")
        if max_depth is not None and max_depth < 1:
            raise SpecError("max_depth must be >= 1 or None")
        self.task = task
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.seed = seed
        self.root: Optional[TreeNode] = None
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int = 0) -> "CartTree":
        X = np.asarray(X, dtype=np.float64)
        if self.task == "classification":
            y = np.asarray(y, dtype=np.int64)
            self.n_classes = n_classes or int(y.max()) + 1
            target = _ClassificationTarget(y, self.n_classes)
            self._impurity = target.impurity_fn(self.criterion)
            self._onehot = target.onehot
        else:
            y = np.asarray(y, dtype=np.float64)
        self._m = resolve_max_features(self.max_features, X.shape[1])
        rng = np.random.default_rng(self.seed)
        self.root = self._grow(X, y, np.arange(X.shape[0]), depth=0, rng=rng)
        if self.task == "classification":
            del self._onehot
        return self

    def _leaf(self, y: np.ndarray, idx: np.ndarray) -> TreeNode:
        if self.task == "classification":
            return TreeNode(value=_majority(y[idx], self.n_classes))
        return TreeNode(value=float(np.mean(y[idx])))

    def _grow(self, X, y, idx, depth, rng) -> TreeNode:
        n = idx.shape[0]
        if self.task == "classification":
            impure = _node_impurity_classification(y[idx], self.n_classes, self._impurity)
        else:
            impure = _node_impurity_regression(y[idx])
        if (
            n < self.min_samples_split
            or impure == 0.0
            or (self.max_depth is not None and depth >= self.max_depth)
        ):
            return self._leaf(y, idx)

        n_features = X.shape[1]
        if self._m is None or self._m >= n_features:
            features = np.arange(n_features)
        else:
            features = rng.permutation(n_features)[: self._m]

        best_score = np.inf
        best_feature = -1
        best_threshold = 0.0
        for f in features:
            vals = X[idx, f]
            order = np.argsort(vals, kind="stable")
            v = vals[order]
            distinct = np.nonzero(v[:-1] < v[1:])[0]
            if distinct.size == 0:
                continue
            cut_sizes = distinct + 1  # left child sizes
            valid = (cut_sizes >= self.min_samples_leaf) & (n - cut_sizes >= self.min_samples_leaf)
            if not np.any(valid):
                continue
            cut_sizes = cut_sizes[valid]
            if self.task == "classification":
                scores = _classification_split_scores(
                    self._onehot[idx[order]], self._impurity, cut_sizes, n
                )
            else:
                scores = _regression_split_scores(y[idx[order]], cut_sizes, n)
            k = int(np.argmin(scores))
            if scores[k] < best_score:
                best_score = scores[k]
                pos = cut_sizes[k] - 1
                best_threshold = (v[pos] + v[pos + 1]) / 2.0
                best_feature = int(f)

        if best_feature < 0:
            return self._leaf(y, idx)
        mask = X[idx, best_feature] <= best_threshold
        left_idx = idx[mask]
        right_idx = idx[~mask]
        if left_idx.size == 0 or right_idx.size == 0:  # midpoint rounding collapse
            return self._leaf(y, idx)
        node = TreeNode(value=self._leaf(y, idx).value, feature=best_feature, threshold=best_threshold)
        node.left = self._grow(X, y, left_idx, depth + 1, rng)
        node.right = self._grow(X, y, right_idx, depth + 1, rng)
        return node

    def predict_value(self, x: np.ndarray) -> float:
        node = self.root
        while node.feature is not None:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.array([self.predict_value(x) for x in X])
        if self.task == "classification":
            return out.astype(np.int64)
        return out

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "criterion": self.criterion,
            "n_classes": self.n_classes,
            "root": self.root.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "CartTree":
        tree = CartTree(task=obj["task"], criterion=obj.get("criterion", "gini"))
        tree.n_classes = obj.get("n_classes", 0)
        tree.root = TreeNode.from_json(obj["root"])
        return tree
