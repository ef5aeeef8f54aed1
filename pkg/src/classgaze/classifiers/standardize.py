"""Per-feature standardization fitted on training statistics only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DatasetError
from .dataset import LabeledDataset


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64))
        if self.mean.shape != self.scale.shape or self.mean.ndim != 1:
            raise ContractError("mean and scale must be matching 1-d arrays")
        if np.any(self.scale <= 0):
            raise ContractError("scale components must be positive")


def fit_standardizer(train: LabeledDataset) -> Standardizer:
    """Mean and population standard deviation per feature.

    Zero-variance features get scale 1 so they pass through instead of
    dividing by zero.
    """
    if train.n == 0:
        raise DatasetError("cannot fit standardizer on empty dataset")
    mean = train.X.mean(axis=0)
    scale = train.X.std(axis=0)  # population SD (ddof=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return Standardizer(mean=mean, scale=scale)


def standardize(s: Standardizer, v: np.ndarray) -> np.ndarray:
    """Apply (v - mean) / scale feature-wise; accepts a vector or matrix."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != s.mean.shape[0]:
        raise ContractError(
            f"dimension mismatch: input has {v.shape[-1]} features, standardizer {s.mean.shape[0]}"
        )
    return (v - s.mean) / s.scale
