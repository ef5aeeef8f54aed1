"""One-vs-rest kernel SVM trained with a simplified SMO dual solver.

Each class gets a binary head (+1 = class, -1 = rest); prediction is the
argmax of the heads' decision values, ties resolving to the lower class
index.  The solver follows the classic two-multiplier update scheme with
random partner selection from a seeded generator, convergence tolerance
1e-3 and a pass cap, so training is deterministic per seed.
"""
from __future__ import annotations

import numpy as np

from ..errors import SpecError

KERNELS = ("rbf", "linear", "poly", "sigmoid")


def resolve_gamma(gamma, X: np.ndarray) -> float:
    """'auto' = 1/n_features; 'scale' = 1/(n_features * var of all entries)."""
    n_features = X.shape[1]
    if gamma == "auto":
        return 1.0 / n_features
    if gamma == "scale":
        var = float(X.var())
        return 1.0 / (n_features * var) if var > 0 else 1.0 / n_features
    value = float(gamma)
    if value <= 0:
        raise SpecError(f"gamma must be positive, got {gamma!r}")
    return value


def kernel_matrix(kind: str, A: np.ndarray, B: np.ndarray, gamma: float,
                  degree: int = 3, coef0: float = 0.0) -> np.ndarray:
    if kind == "linear":
        return A @ B.T
    if kind == "rbf":
        d2 = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        return np.exp(-gamma * np.maximum(d2, 0.0))
    if kind == "poly":
        return (gamma * (A @ B.T) + coef0) ** degree
    if kind == "sigmoid":
        return np.tanh(gamma * (A @ B.T) + coef0)
    raise SpecError(f"unknown kernel {kind!r}")


class _BinaryHead:
    def __init__(self, alpha_y: np.ndarray, support: np.ndarray, b: float):
        self.alpha_y = alpha_y  # alpha_i * y_i for support vectors
        self.support = support  # support vector rows
        self.b = b


def _train_binary(K: np.ndarray, y: np.ndarray, C: float, tol: float,
                  max_passes: int, max_iter: int, rng) -> tuple[np.ndarray, float]:
    m = y.shape[0]
    alpha = np.zeros(m)
    b = 0.0
    F = np.zeros(m)  # decision values f(x_i) - b tracked incrementally

    passes = 0
    iters = 0
    while passes < max_passes and iters < max_iter:
        iters += 1
        changed = 0
        for i in range(m):
            Ei = F[i] + b - y[i]
            if (y[i] * Ei < -tol and alpha[i] < C) or (y[i] * Ei > tol and alpha[i] > 0):
                j = int(rng.integers(m - 1))
                if j >= i:
                    j += 1
                Ej = F[j] + b - y[j]
                ai_old, aj_old = alpha[i], alpha[j]
                if y[i] != y[j]:
                    low, high = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
                else:
                    low, high = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
                if low == high:
                    continue
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if eta >= 0:
                    continue
                aj = aj_old - y[j] * (Ei - Ej) / eta
                aj = min(high, max(low, aj))
                if abs(aj - aj_old) < 1e-5:
                    continue
                ai = ai_old + y[i] * y[j] * (aj_old - aj)
                alpha[i], alpha[j] = ai, aj
                F += (ai - ai_old) * y[i] * K[i] + (aj - aj_old) * y[j] * K[j]
                b1 = b - Ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
                b2 = b - Ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
                if 0 < ai < C:
                    b = b1
                elif 0 < aj < C:
                    b = b2
                else:
                    b = (b1 + b2) / 2.0
                changed += 1
        passes = passes + 1 if changed == 0 else 0
    return alpha, b


class SvmClassifier:
    def __init__(
        self,
        *,
        C: float,
        kernel: str = "rbf",
        gamma="scale",
        degree: int = 3,
        coef0: float = 0.0,
        tol: float = 1e-3,
        max_passes: int = 5,
        max_iter: int = 200,
        seed: int = 0,
    ):
        if C <= 0:
            raise SpecError(f"C must be positive, got {C}")
        if kernel not in KERNELS:
            raise SpecError(f"kernel must be one of {KERNELS}, got {kernel!r}")
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.tol = tol
        self.max_passes = max_passes
        self.max_iter = max_iter
        self.seed = seed
        self.heads: list[_BinaryHead] = []
        self.gamma_value = 0.0
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "SvmClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        self.gamma_value = resolve_gamma(self.gamma, X)
        K = kernel_matrix(self.kernel, X, X, self.gamma_value, self.degree, self.coef0)
        self.heads = []
        for c in range(n_classes):
            yc = np.where(y == c, 1.0, -1.0)
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, c]))
            alpha, b = _train_binary(K, yc, self.C, self.tol, self.max_passes, self.max_iter, rng)
            sv = np.nonzero(alpha > 1e-12)[0]
            self.heads.append(_BinaryHead(alpha[sv] * yc[sv], X[sv], b))
        return self

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        scores = np.zeros((X.shape[0], self.n_classes))
        for c, head in enumerate(self.heads):
            if head.support.shape[0] > 0:
                k = kernel_matrix(self.kernel, X, head.support, self.gamma_value,
                                  self.degree, self.coef0)
                scores[:, c] = k @ head.alpha_y + head.b
            else:
                scores[:, c] = head.b
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_scores(X), axis=1).astype(np.int64)

    def to_json(self) -> dict:
        return {
            "kernel": self.kernel,
            "gamma_value": self.gamma_value,
            "degree": self.degree,
            "coef0": self.coef0,
            "n_classes": self.n_classes,
            "heads": [
                {"alpha_y": h.alpha_y.tolist(), "support": h.support.tolist(), "b": h.b}
                for h in self.heads
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "SvmClassifier":
        model = SvmClassifier(C=1.0, kernel=obj["kernel"], degree=obj["degree"], coef0=obj["coef0"])
        model.gamma_value = obj["gamma_value"]
        model.n_classes = obj["n_classes"]
        model.heads = [
            _BinaryHead(np.array(h["alpha_y"], dtype=np.float64),
                        np.array(h["support"], dtype=np.float64), h["b"])
            for h in obj["heads"]
        ]
        return model
