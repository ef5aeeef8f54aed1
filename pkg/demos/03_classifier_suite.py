#!/usr/bin/env python3
"""Train all five classifier families on identity-like embedding clusters.

Mimics the transfer-learning setup: 30 unit-norm 512-d embeddings per
"student", standardized, then fed to each family.  Holdout accuracy is
printed per family.
"""
import numpy as np

from classgaze.classifiers import LabeledDataset, ModelSpec, predict_batch, train

rng = np.random.default_rng(0)
n_students, per_student, dim = 6, 30, 512

centers = rng.standard_normal((n_students, dim))
centers /= np.linalg.norm(centers, axis=1, keepdims=True)
sigma = 0.35 / np.sqrt(dim)  # noticeable but separable within-cluster noise


def draw(count):
    X, labels = [], []
    for s in range(n_students):
        raw = centers[s] + sigma * rng.standard_normal((count, dim))
        X.append(raw / np.linalg.norm(raw, axis=1, keepdims=True))
        labels += [f"S{s+1:02d}"] * count
    return np.vstack(X), labels


train_X, train_labels = draw(per_student)
test_X, test_labels = draw(10)
dataset = LabeledDataset(X=train_X, labels=tuple(train_labels),
                         class_set=tuple(f"S{s+1:02d}" for s in range(n_students)))

specs = [
    ModelSpec("rf", {"n_estimators": 50, "max_features": "sqrt", "max_depth": 20}, seed=1),
    ModelSpec("svm", {"C": 1.0, "gamma": "scale", "kernel": "rbf"}, seed=1),
    ModelSpec("knn", {"k": 5}),
    ModelSpec("gb", {"n_estimators": 15, "min_samples_leaf": 1, "min_samples_split": 2}, seed=1),
    ModelSpec("dt", {"criterion": "gini", "max_depth": 20, "max_features": "sqrt"}, seed=1),
]

print(f"{n_students} students x {per_student} crops, 512-d embeddings\n")
print(f"{'family':<6} {'train acc':>9} {'test acc':>9}")
for spec in specs:
    model = train(spec, dataset)
    train_acc = np.mean(np.array(predict_batch(model, train_X)) == np.array(train_labels))
    test_acc = np.mean(np.array(predict_batch(model, test_X)) == np.array(test_labels))
    print(f"{spec.family:<6} {train_acc:>9.3f} {test_acc:>9.3f}")
