#!/usr/bin/env python3
"""Stratified 5-fold grid search, the way the training command runs it.

Uses the k-nearest-neighbor family (9-point grid) on clustered embeddings
with unequal class sizes, prints the per-fold class balance and the mean
validation accuracy per grid point, then refits the winner.
"""
import numpy as np

from classgaze.classifiers import LabeledDataset, default_grids, predict_batch
from classgaze.selection import grid_search, refit_best, stratified_folds

rng = np.random.default_rng(7)
sizes = {"S01": 30, "S02": 30, "S03": 18, "S04": 12}
dim = 64

X, labels = [], []
for i, (student, count) in enumerate(sizes.items()):
    X.append(rng.standard_normal((count, dim)) * 0.6 + 4.0 * i)
    labels += [student] * count
dataset = LabeledDataset(X=np.vstack(X), labels=tuple(labels), class_set=tuple(sizes))

assignment = stratified_folds(dataset, k=5, seed=0)
print("per-class fold counts (rows: class, cols: fold):")
for cls in dataset.class_set:
    rows = [i for i, lab in enumerate(dataset.labels) if lab == cls]
    counts = np.bincount(assignment.fold_of[rows], minlength=5)
    print(f"  {cls}: {counts.tolist()}  (total {sizes[cls]})")

grid = default_grids()["knn"]
best, results = grid_search("knn", grid, dataset, k=5, seed=0)
print("\nmean validation accuracy per grid point:")
for r in results:
    marker = " <- selected" if r.spec == best else ""
    print(f"  k={r.spec.hyperparameters['k']:>2}: {r.mean_accuracy:.4f}{marker}")

model = refit_best(best, dataset)
train_acc = np.mean(np.array(predict_batch(model, dataset.X)) == np.array(dataset.labels))
print(f"\nrefit on all {dataset.n} examples; training accuracy {train_acc:.3f}")
