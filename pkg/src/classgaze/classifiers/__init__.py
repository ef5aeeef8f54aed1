"""Classifier suite over standardized face embeddings.

Five families trained by transfer on frozen 512-d embeddings: random
forest, support vector machine, k-nearest neighbor, gradient boosting and
decision tree.  ``train`` fits the standardizer on the given data and the
family model on the standardized features; ``predict`` applies both.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import numpy as np

from ..errors import SpecError
from .boosting import GradientBoostingClassifier
from .dataset import LabeledDataset, from_pairs, require_trainable
from .forest import RandomForestClassifier
from .impurity import entropy_impurity, gini_impurity
from .knn import KnnClassifier
from .standardize import Standardizer, fit_standardizer, standardize
from .svm import SvmClassifier
from .tree import CartTree, resolve_max_features

__all__ = [
    "CartTree",
    "FAMILIES",
    "GradientBoostingClassifier",
    "KnnClassifier",
    "LabeledDataset",
    "ModelSpec",
    "RandomForestClassifier",
    "Standardizer",
    "SvmClassifier",
    "TrainedModel",
    "default_grids",
    "entropy_impurity",
    "fit_standardizer",
    "from_pairs",
    "gini_impurity",
    "load_grids_toml",
    "load_model",
    "predict",
    "predict_batch",
    "resolve_max_features",
    "save_model",
    "standardize",
    "train",
    "validate_spec_against_grid",
]

FAMILIES = ("rf", "svm", "knn", "gb", "dt")

# Search-grid hyperparameters per family, row order as searched; the first
# row varies fastest during enumeration.
_GRID_ROWS: dict[str, tuple[str, ...]] = {
    "rf": ("max_depth", "max_features", "min_samples_leaf", "min_samples_split", "n_estimators"),
    "svm": ("C", "gamma", "kernel"),
    "knn": ("k",),
    "gb": ("n_estimators", "min_samples_leaf", "min_samples_split"),
    "dt": ("max_depth", "max_features", "min_samples_leaf", "min_samples_split", "criterion"),
}

# Values admissible for grid-driven searches.  Programmatic use may go
# beyond these (e.g. rf bootstrap=False, unbounded tree depth) — see
# validate_spec_against_grid.
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "rf": {
        "max_depth": [10, 20, 40, 80, 160],
        "max_features": ["sqrt", "log2"],
        "min_samples_leaf": [1, 2, 3, 4, 5],
        "min_samples_split": [2, 4, 8, 16],
        "n_estimators": [25, 50, 100, 200, 400, 600, 800, 1000, 1200, 1400, 1600],
    },
    "svm": {
        "C": [0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0],
        "gamma": ["auto", "scale"],
        "kernel": ["rbf", "linear", "poly", "sigmoid"],
    },
    "knn": {
        "k": [5, 7, 9, 11, 13, 15, 17, 19, 21],
    },
    "gb": {
        "n_estimators": [100, 200, 400, 600],
        "min_samples_leaf": [1, 2],
        "min_samples_split": [2, 4, 8],
    },
    "dt": {
        "max_depth": [10, 20, 40, 80, 160],
        "max_features": ["sqrt", "log2"],
        "min_samples_leaf": [1, 2, 3, 4, 5],
        "min_samples_split": [2, 4, 8, 16],
        "criterion": ["gini", "entropy"],
    },
}

# Pinned values the grid never varies, exposed for ablation via config.
PINNED_DEFAULTS: dict[str, dict[str, Any]] = {
    "rf": {"criterion": "gini", "bootstrap": True},
    "svm": {"degree": 3, "coef0": 0.0, "tol": 1e-3, "max_passes": 5, "max_iter": 200},
    "gb": {"learning_rate": 0.1, "max_depth": 3},
    "knn": {},
    "dt": {},
}


def default_grids() -> dict[str, dict[str, list]]:
    return {fam: {k: list(v) for k, v in rows.items()} for fam, rows in DEFAULT_GRIDS.items()}


def load_grids_toml(path=None) -> dict[str, dict[str, list]]:
    """Load a grid config; without a path, the packaged default grid file."""
    try:
        import tomllib
    except ImportError:  # Python 3.10
        import tomli as tomllib
    if path is None:
        text = resources.files("classgaze.data").joinpath("grids.toml").read_bytes()
        return tomllib.loads(text.decode("utf-8"))
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def normalize_family(name: str) -> str:
    fam = name.strip().lower().replace("-", "")
    aliases = {"randomforest": "rf", "supportvectormachine": "svm", "knearestneighbor": "knn",
               "gradientboosting": "gb", "decisiontree": "dt", "k-nn": "knn", "knn": "knn"}
    fam = aliases.get(fam, fam)
    if fam not in FAMILIES:
        raise SpecError(f"unknown classifier family {name!r}")
    return fam


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", normalize_family(self.family))
        object.__setattr__(self, "hyperparameters", dict(self.hyperparameters))

    def to_json(self) -> dict:
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}

    @staticmethod
    def from_json(obj: dict) -> "ModelSpec":
        return ModelSpec(obj["family"], obj.get("hyperparameters", {}), obj.get("seed", 0))


def validate_spec_against_grid(spec: ModelSpec, grids: Mapping[str, Mapping[str, list]] | None = None) -> None:
    """Check every hyperparameter value sits in its grid column.

    Applied to grid-enumerated and CLI-provided specs.  Extensions used by
    identity checks (rf bootstrap=False, n_estimators=1, max_features=None,
    max_depth=None) intentionally fail this check and are only reachable
    programmatically.
    """
    grids = grids if grids is not None else DEFAULT_GRIDS
    if spec.family not in grids:
        raise SpecError(f"no grid for family {spec.family!r}")
    columns = grids[spec.family]
    for name, value in spec.hyperparameters.items():
        if name not in columns:
            raise SpecError(f"{spec.family}: hyperparameter {name!r} not in grid")
        if value not in columns[name]:
            raise SpecError(f"{spec.family}: value {value!r} not admissible for {name!r}")


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    standardizer: Standardizer
    class_set: tuple[str, ...]
    impl: Any
    n_train: int

    def predict_indices(self, X: np.ndarray) -> np.ndarray:
        Xs = standardize(self.standardizer, np.atleast_2d(np.asarray(X, dtype=np.float64)))
        return self.impl.predict(Xs)


def _merged(spec: ModelSpec) -> dict[str, Any]:
    params = dict(PINNED_DEFAULTS.get(spec.family, {}))
    params.update(spec.hyperparameters)
    return params


def train(spec: ModelSpec, dataset: LabeledDataset) -> TrainedModel:
    """Fit standardizer plus family model; deterministic given spec.seed."""
    require_trainable(dataset)
    std = fit_standardizer(dataset)
    Xs = standardize(std, dataset.X)
    n_classes = len(dataset.class_set)
    p = _merged(spec)
    try:
        if spec.family == "knn":
            impl = KnnClassifier(k=p["k"]).fit(Xs, dataset.y, n_classes)
        elif spec.family == "dt":
            impl = CartTree(
                task="classification",
                criterion=p.get("criterion", "gini"),
                max_depth=p.get("max_depth"),
                min_samples_leaf=p.get("min_samples_leaf", 1),
                min_samples_split=p.get("min_samples_split", 2),
                max_features=p.get("max_features"),
                seed=spec.seed,
            ).fit(Xs, dataset.y, n_classes)
        elif spec.family == "rf":
            impl = RandomForestClassifier(
                n_estimators=p["n_estimators"],
                criterion=p.get("criterion", "gini"),
                max_depth=p.get("max_depth"),
                min_samples_leaf=p.get("min_samples_leaf", 1),
                min_samples_split=p.get("min_samples_split", 2),
                max_features=p.get("max_features", "sqrt"),
                bootstrap=p.get("bootstrap", True),
                seed=spec.seed,
            ).fit(Xs, dataset.y, n_classes)
        elif spec.family == "svm":
            impl = SvmClassifier(
                C=p["C"],
                kernel=p.get("kernel", "rbf"),
                gamma=p.get("gamma", "scale"),
                degree=p.get("degree", 3),
                coef0=p.get("coef0", 0.0),
                tol=p.get("tol", 1e-3),
                max_passes=p.get("max_passes", 5),
                max_iter=p.get("max_iter", 200),
                seed=spec.seed,
            ).fit(Xs, dataset.y, n_classes)
        elif spec.family == "gb":
            impl = GradientBoostingClassifier(
                n_estimators=p["n_estimators"],
                min_samples_leaf=p.get("min_samples_leaf", 1),
                min_samples_split=p.get("min_samples_split", 2),
                learning_rate=p.get("learning_rate", 0.1),
                max_depth=p.get("max_depth", 3),
                seed=spec.seed,
            ).fit(Xs, dataset.y, n_classes)
        else:  # pragma: no cover - normalize_family guards this
            raise SpecError(f"unknown family {spec.family!r}")
    except KeyError as exc:
        raise SpecError(f"{spec.family}: missing hyperparameter {exc.args[0]!r}") from exc
    return TrainedModel(spec=spec, standardizer=std, class_set=dataset.class_set,
                        impl=impl, n_train=dataset.n)


def predict(model: TrainedModel, v: np.ndarray) -> str:
    """Classify one embedding; returns a label from the model's class_set."""
    return model.class_set[int(model.predict_indices(np.asarray(v))[0])]


def predict_batch(model: TrainedModel, X: np.ndarray) -> list[str]:
    return [model.class_set[int(i)] for i in model.predict_indices(X)]


_IMPL_CODECS = {
    "knn": (KnnClassifier, "knn"),
    "dt": (CartTree, "dt"),
    "rf": (RandomForestClassifier, "rf"),
    "svm": (SvmClassifier, "svm"),
    "gb": (GradientBoostingClassifier, "gb"),
}

MODEL_FORMAT = "classgaze-model"
MODEL_VERSION = 1


def model_to_json(model: TrainedModel, embedding_backend: str = "") -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": model.spec.to_json(),
        "class_set": list(model.class_set),
        "n_train": model.n_train,
        "embedding_backend": embedding_backend,
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "scale": model.standardizer.scale.tolist(),
        },
        "state": model.impl.to_json(),
    }


def model_from_json(obj: dict) -> TrainedModel:
    if obj.get("format") != MODEL_FORMAT:
        raise SpecError(f"not a model artifact: format={obj.get('format')!r}")
    if obj.get("version") != MODEL_VERSION:
        raise SpecError(f"unsupported model artifact version {obj.get('version')!r}")
    spec = ModelSpec.from_json(obj["spec"])
    impl_cls, _ = _IMPL_CODECS[spec.family]
    return TrainedModel(
        spec=spec,
        standardizer=Standardizer(
            mean=np.array(obj["standardizer"]["mean"], dtype=np.float64),
            scale=np.array(obj["standardizer"]["scale"], dtype=np.float64),
        ),
        class_set=tuple(obj["class_set"]),
        impl=impl_cls.from_json(obj["state"]),
        n_train=int(obj["n_train"]),
    )


def save_model(path, model: TrainedModel, embedding_backend: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model, embedding_backend), fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
