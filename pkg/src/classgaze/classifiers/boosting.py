"""One-vs-rest gradient boosting on logistic loss.

Each class gets an additive ensemble of depth-limited regression trees fit
to the logistic-loss negative gradient, with Newton leaf updates.  The
base-learner depth is pinned at 3 and the learning rate at 0.1; the grid
controls estimator count and the leaf/split minima.
"""
from __future__ import annotations

import numpy as np

from ..errors import SpecError
from .tree import CartTree, TreeNode


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _leaf_regions(tree: CartTree, X: np.ndarray) -> np.ndarray:
    """Identity of the leaf each row lands in (by preorder leaf number)."""
    leaves: dict[int, int] = {}

    def walk(node: TreeNode):
        if node.feature is None:
            leaves[id(node)] = len(leaves)
        else:
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, x in enumerate(X):
        node = tree.root
        while node.feature is not None:
            node = node.left if x[node.feature] <= node.threshold else node.right
        out[i] = leaves[id(node)]
    return out


def _set_leaf_values(tree: CartTree, values: dict[int, float]) -> None:
    counter = [0]

    def walk(node: TreeNode):
        if node.feature is None:
            node.value = values[counter[0]]
            counter[0] += 1
        else:
            walk(node.left)
            walk(node.right)

    walk(tree.root)


class GradientBoostingClassifier:
    def __init__(
        self,
        *,
        n_estimators: int,
        min_samples_leaf: int = 1,
        min_samples_split: int = 2,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        seed: int = 0,
    ):
        if n_estimators < 1:
            raise SpecError(f"n_estimators must be >= 1, got {n_estimators}")
        if learning_rate <= 0:
            raise SpecError(f"learning_rate must be positive, got {learning_rate}")
        self.n_estimators = n_estimators
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.seed = seed
        self.n_classes = 0
        self.init_scores: list[float] = []
        self.stages: list[list[CartTree]] = []  # stages[class][stage]

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "GradientBoostingClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        self.init_scores = []
        self.stages = []
        for c in range(n_classes):
            yc = (y == c).astype(np.float64)
            p = float(np.clip(yc.mean(), 1e-12, 1 - 1e-12))
            f0 = float(np.log(p / (1.0 - p)))
            F = np.full(X.shape[0], f0)
            trees: list[CartTree] = []
            for m in range(self.n_estimators):
                prob = _sigmoid(F)
                residual = yc - prob
                tree = CartTree(
                    task="regression",
                    max_depth=self.max_depth,
                    min_samples_leaf=self.min_samples_leaf,
                    min_samples_split=self.min_samples_split,
                    max_features=None,
                    seed=self.seed,
                )
                tree.fit(X, residual)
                regions = _leaf_regions(tree, X)
                gammas: dict[int, float] = {}
                for leaf in np.unique(regions):
                    mask = regions == leaf
                    denom = float(np.sum(prob[mask] * (1.0 - prob[mask])))
                    num = float(np.sum(residual[mask]))
                    gammas[int(leaf)] = num / denom if denom > 1e-12 else 0.0
                _set_leaf_values(tree, gammas)
                F = F + self.learning_rate * np.array([gammas[int(r)] for r in regions])
                trees.append(tree)
            self.init_scores.append(f0)
            self.stages.append(trees)
        return self

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        scores = np.zeros((X.shape[0], self.n_classes))
        for c in range(self.n_classes):
            F = np.full(X.shape[0], self.init_scores[c])
            for tree in self.stages[c]:
                F = F + self.learning_rate * tree.predict(X)
            scores[:, c] = F
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_scores(X), axis=1).astype(np.int64)

    def to_json(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "learning_rate": self.learning_rate,
            "init_scores": self.init_scores,
            "stages": [[t.to_json() for t in trees] for trees in self.stages],
        }

    @staticmethod
    def from_json(obj: dict) -> "GradientBoostingClassifier":
        model = GradientBoostingClassifier(n_estimators=max(1, len(obj["stages"][0]) if obj["stages"] else 1))
        model.n_classes = obj["n_classes"]
        model.learning_rate = obj["learning_rate"]
        model.init_scores = list(obj["init_scores"])
        model.stages = [[CartTree.from_json(t) for t in trees] for trees in obj["stages"]]
        return model
