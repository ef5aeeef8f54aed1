"""Stratified cross-validated grid search and final refit.

Every grid point is scored with the same fold assignment; per-fold models
fit their own standardizer on that fold's training rows only, so no
validation statistic ever leaks into the transform.  Selection is by mean
validation accuracy, ties going to the earlier point in enumeration order.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .classifiers import (
    _GRID_ROWS,
    LabeledDataset,
    ModelSpec,
    TrainedModel,
    train,
    validate_spec_against_grid,
)
from .errors import ClassgazeError, ConfigError


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray  # (n,) fold id per example
    k: int

    def train_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of != fold)[0]

    def validation_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of == fold)[0]


def stratified_folds(dataset: LabeledDataset, k: int, seed: int) -> FoldAssignment:
    """Assign rows to k folds, preserving per-class proportions.

    Within each class the (seed-shuffled) examples go round-robin over
    folds 0..k-1, so per-class fold counts never differ by more than one
    and classes smaller than k land in the first folds.
    """
    if k < 2:
        raise ConfigError(f"fold count must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(dataset.n, dtype=np.int64)
    for ci, cls in enumerate(dataset.class_set):
        rows = np.nonzero(dataset.y == ci)[0]
        if 0 < rows.shape[0] < k:
            warnings.warn(
                f"class {cls!r} has {rows.shape[0]} examples for {k} folds; "
                "some validation folds will not contain it",
                stacklevel=2,
            )
        rows = rows[rng.permutation(rows.shape[0])]
        for pos, row in enumerate(rows):
            fold_of[row] = pos % k
    return FoldAssignment(fold_of=fold_of, k=k)


@dataclass(frozen=True)
class CVResult:
    spec: ModelSpec
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    failed: bool = False
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "fold_accuracies": list(self.fold_accuracies),
            "mean_accuracy": self.mean_accuracy,
            "failed": self.failed,
            "error": self.error,
        }


def enumerate_grid(family: str, grid: Mapping[str, Sequence], master_seed: int = 0) -> list[ModelSpec]:
    """Cartesian product in canonical order: first grid row varies fastest.

    Each point's seed derives from the master seed and its enumeration
    index, so parallel evaluation cannot change results.
    """
    rows = _GRID_ROWS.get(family)
    if rows is None:
        raise ConfigError(f"unknown family {family!r}")
    names = [name for name in rows if name in grid]
    extras = [name for name in grid if name not in rows]
    if extras:
        raise ConfigError(f"{family}: grid rows {extras} are not searchable hyperparameters")
    if not names:
        raise ConfigError(f"{family}: empty grid")
    values = [list(grid[name]) for name in names]
    total = int(np.prod([len(v) for v in values]))
    specs: list[ModelSpec] = []
    for index in range(total):
        residue = index
        params = {}
        for name, column in zip(names, values):
            params[name] = column[residue % len(column)]
            residue //= len(column)
        seed = int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])
        specs.append(ModelSpec(family, params, seed=seed))
    return specs


def cross_validate_spec(
    spec: ModelSpec,
    dataset: LabeledDataset,
    assignment: FoldAssignment,
    return_models: bool = False,
):
    """Score one spec over the shared folds.

    Returns fold accuracies (and the per-fold models when asked, which the
    leakage tests inspect for standardizer provenance).
    """
    accuracies: list[float] = []
    models: list[TrainedModel] = []
    for fold in range(assignment.k):
        train_rows = assignment.train_indices(fold)
        val_rows = assignment.validation_indices(fold)
        model = train(spec, dataset.subset(train_rows))
        if val_rows.shape[0] == 0:
            accuracies.append(0.0)
        else:
            predicted = model.predict_indices(dataset.X[val_rows])
            truth = [dataset.labels[i] for i in val_rows]
            hits = sum(1 for p, t in zip(predicted, truth) if model.class_set[int(p)] == t)
            accuracies.append(hits / val_rows.shape[0])
        if return_models:
            models.append(model)
    if return_models:
        return accuracies, models
    return accuracies


def grid_search(
    family: str,
    grid: Mapping[str, Sequence],
    dataset: LabeledDataset,
    k: int = 5,
    seed: int = 0,
    validate: bool = True,
) -> tuple[ModelSpec, list[CVResult]]:
    """Evaluate the full grid with one shared fold assignment.

    A spec whose training fails on any fold is recorded as failed and
    skipped for selection; the search itself never aborts.
    """
    specs = enumerate_grid(family, grid, master_seed=seed)
    if validate:
        for spec in specs:
            validate_spec_against_grid(spec, {family: {k_: list(v) for k_, v in grid.items()}})
    assignment = stratified_folds(dataset, k, seed)
    results: list[CVResult] = []
    best: Optional[tuple[float, int]] = None
    for i, spec in enumerate(specs):
        try:
            accuracies = cross_validate_spec(spec, dataset, assignment)
            mean = float(np.mean(accuracies))
            results.append(CVResult(spec, tuple(accuracies), mean))
            if best is None or mean > best[0]:
                best = (mean, i)
        except ClassgazeError as exc:
            results.append(CVResult(spec, (), 0.0, failed=True, error=str(exc)))
    if best is None:
        raise ConfigError(f"{family}: every grid point failed to train")
    return specs[best[1]], results


def refit_best(best: ModelSpec, dataset: LabeledDataset) -> TrainedModel:
    """Train the selected spec on the full dataset (full-data standardizer)."""
    return train(best, dataset)


def write_cv_report(path, results: Sequence[CVResult]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_json() for r in results], fh, separators=(",", ":"))
        fh.write("\n")


def read_cv_report(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
