"""Random forest: seeded bootstrap CART ensemble with majority vote."""
from __future__ import annotations

from typing import Optional, Union

import numpy as np

from ..errors import SpecError
from .tree import CartTree


class RandomForestClassifier:
    """Bagged classification trees.

    Per-tree seeds spawn deterministically from the forest seed; with
    ``bootstrap=False``, ``n_estimators=1`` and all features the forest is
    tree-for-tree identical to a single CART.  Vote ties resolve to the
    lowest class index.
    """

    def __init__(
        self,
        *,
        n_estimators: int,
        criterion: str = "gini",
        max_depth: Optional[int] = None,
        min_samples_leaf: int = 1,
        min_samples_split: int = 2,
        max_features: Union[str, int, None] = "sqrt",
        bootstrap: bool = True,
        seed: int = 0,
    ):
        if n_estimators < 1:
            raise SpecError(f"n_estimators must be >= 1, got {n_estimators}")
        self.n_estimators = n_estimators
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees: list[CartTree] = []
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "RandomForestClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        tree_seeds = np.random.SeedSequence(self.seed).generate_state(self.n_estimators)
        self.trees = []
        for t in range(self.n_estimators):
            # a degenerate single-tree forest without bagging must replicate
            # the equivalent standalone CART, including its seed
            if not self.bootstrap and self.n_estimators == 1:
                tree_seed = self.seed
            else:
                tree_seed = int(tree_seeds[t])
            if self.bootstrap:
                rng = np.random.default_rng(int(tree_seeds[t]))
                sample = rng.integers(0, X.shape[0], size=X.shape[0])
                Xt, yt = X[sample], y[sample]
            else:
                Xt, yt = X, y
            tree = CartTree(
                task="classification",
                criterion=self.criterion,
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                min_samples_split=self.min_samples_split,
                max_features=self.max_features,
                seed=tree_seed,
            )
            self.trees.append(tree.fit(Xt, yt, n_classes))
        return self

    def predict_one(self, x: np.ndarray) -> int:
        votes = np.zeros(self.n_classes, dtype=np.int64)
        for tree in self.trees:
            votes[int(tree.predict_value(x))] += 1
        return int(np.argmax(votes))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(x) for x in np.asarray(X, dtype=np.float64)], dtype=np.int64)

    def to_json(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "trees": [t.to_json() for t in self.trees],
        }

    @staticmethod
    def from_json(obj: dict) -> "RandomForestClassifier":
        model = RandomForestClassifier(n_estimators=max(1, len(obj["trees"])))
        model.n_classes = obj["n_classes"]
        model.trees = [CartTree.from_json(t) for t in obj["trees"]]
        return model
