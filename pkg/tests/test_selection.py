import numpy as np
import pytest

from classgaze.classifiers import LabeledDataset, ModelSpec, default_grids, fit_standardizer
from classgaze.errors import ConfigError
from classgaze.selection import (
    cross_validate_spec,
    enumerate_grid,
    grid_search,
    read_cv_report,
    refit_best,
    stratified_folds,
    write_cv_report,
)
from tests.test_classifiers import cluster_dataset, dataset_from_arrays


def fold_counts(dataset, assignment):
    """Counting oracle: per-class tallies of fold membership."""
    out = {}
    for cls in dataset.class_set:
        rows = [i for i, label in enumerate(dataset.labels) if label == cls]
        counts = [0] * assignment.k
        for r in rows:
            counts[assignment.fold_of[r]] += 1
        out[cls] = counts
    return out


def make_dataset(class_sizes, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    X, labels = [], []
    for cls, size in class_sizes.items():
        X.append(rng.standard_normal((size, dim)))
        labels += [cls] * size
    return dataset_from_arrays(np.vstack(X), labels)


class TestStratifiedFolds:
    def test_exact_divisibility(self):
        ds = make_dataset({"A": 5, "B": 5})
        counts = fold_counts(ds, stratified_folds(ds, 5, seed=0))
        assert counts["A"] == [1, 1, 1, 1, 1]
        assert counts["B"] == [1, 1, 1, 1, 1]

    def test_canonical_thirty_per_class_five_folds(self):
        ds = make_dataset({f"S{i}": 30 for i in range(4)})
        counts = fold_counts(ds, stratified_folds(ds, 5, seed=1))
        for cls in ds.class_set:
            assert counts[cls] == [6, 6, 6, 6, 6]

    def test_uneven_classes_match_counting_oracle(self):
        ds = make_dataset({"A": 7, "B": 3})
        counts = fold_counts(ds, stratified_folds(ds, 5, seed=2))
        assert sorted(counts["A"], reverse=True) == [2, 2, 1, 1, 1]
        assert sorted(counts["B"], reverse=True) == [1, 1, 1, 0, 0]
        # samples of a small class spread across the first folds
        assert counts["B"][:3] == [1, 1, 1]

    def test_partition_disjoint_exhaustive_balanced(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            sizes = {f"c{i}": int(rng.integers(1, 40)) for i in range(int(rng.integers(2, 6)))}
            k = int(rng.integers(2, 8))
            ds = make_dataset(sizes, seed=int(rng.integers(10_000)))
            assignment = stratified_folds(ds, k, seed=int(rng.integers(10_000)))
            assert assignment.fold_of.shape[0] == ds.n
            assert set(assignment.fold_of) <= set(range(k))
            for counts in fold_counts(ds, assignment).values():
                assert max(counts) - min(counts) <= 1
            all_rows = np.concatenate([assignment.validation_indices(f) for f in range(k)])
            assert sorted(all_rows) == list(range(ds.n))

    def test_deterministic_per_seed(self):
        ds = make_dataset({"A": 13, "B": 9})
        a = stratified_folds(ds, 5, seed=4)
        b = stratified_folds(ds, 5, seed=4)
        assert np.array_equal(a.fold_of, b.fold_of)

    def test_k_below_two_rejected(self):
        ds = make_dataset({"A": 3, "B": 3})
        with pytest.raises(ConfigError):
            stratified_folds(ds, 1, seed=0)

    def test_class_smaller_than_k_allowed_with_warning(self):
        ds = make_dataset({"A": 10, "B": 3})
        with pytest.warns(UserWarning, match="'B' has 3 examples"):
            assignment = stratified_folds(ds, 5, seed=0)
        counts = fold_counts(ds, assignment)
        assert counts["B"][:3] == [1, 1, 1]


class TestEnumeration:
    def test_grid_cardinalities(self):
        grids = default_grids()
        assert len(enumerate_grid("rf", grids["rf"])) == 2200
        assert len(enumerate_grid("svm", grids["svm"])) == 56
        assert len(enumerate_grid("knn", grids["knn"])) == 9
        assert len(enumerate_grid("gb", grids["gb"])) == 24
        assert len(enumerate_grid("dt", grids["dt"])) == 400

    def test_first_row_varies_fastest(self):
        specs = enumerate_grid("dt", default_grids()["dt"])
        assert specs[0].hyperparameters == {
            "max_depth": 10, "max_features": "sqrt", "min_samples_leaf": 1,
            "min_samples_split": 2, "criterion": "gini",
        }
        assert specs[1].hyperparameters["max_depth"] == 20
        assert specs[1].hyperparameters["max_features"] == "sqrt"
        assert specs[5].hyperparameters["max_depth"] == 10
        assert specs[5].hyperparameters["max_features"] == "log2"
        # last spec is the last value of every row
        assert specs[-1].hyperparameters == {
            "max_depth": 160, "max_features": "log2", "min_samples_leaf": 5,
            "min_samples_split": 16, "criterion": "entropy",
        }

    def test_enumeration_deterministic(self):
        a = enumerate_grid("svm", default_grids()["svm"], master_seed=5)
        b = enumerate_grid("svm", default_grids()["svm"], master_seed=5)
        assert a == b

    def test_per_spec_seeds_derived_from_master_and_index(self):
        a = enumerate_grid("knn", default_grids()["knn"], master_seed=5)
        b = enumerate_grid("knn", default_grids()["knn"], master_seed=6)
        assert [s.seed for s in a] != [s.seed for s in b]
        assert len({s.seed for s in a}) == len(a)


class TestGridSearch:
    def test_single_point_grid_is_best(self):
        rng = np.random.default_rng(6)
        ds, _ = cluster_dataset(rng, dim=6)
        best, results = grid_search("knn", {"k": [5]}, ds, k=3, seed=0, validate=False)
        assert best.hyperparameters == {"k": 5}
        assert len(results) == 1

    def test_small_k_beats_huge_k_on_separated_clusters(self):
        # imbalanced clusters: an all-training-set vote collapses to the
        # majority class, so the huge k must score strictly worse
        ds = make_dataset({"A": 16, "B": 8, "C": 8}, dim=6, seed=7)
        ds = dataset_from_arrays(
            ds.X + 8.0 * np.array([{"A": 0, "B": 1, "C": 2}[c] for c in ds.labels])[:, None],
            ds.labels,
        )
        best, results = grid_search("knn", {"k": [1, 29]}, ds, k=5, seed=0, validate=False)
        assert best.hyperparameters["k"] == 1
        by_k = {r.spec.hyperparameters["k"]: r.mean_accuracy for r in results}
        assert by_k[1] > by_k[29]

    def test_tie_breaks_to_enumeration_order(self):
        rng = np.random.default_rng(8)
        ds, _ = cluster_dataset(rng, n_classes=2, per_class=10, dim=4, spread=0.05, sep=10.0)
        # both k values classify perfectly -> tie -> first in enumeration order
        best, results = grid_search("knn", {"k": [3, 5]}, ds, k=5, seed=0, validate=False)
        assert results[0].mean_accuracy == results[1].mean_accuracy == 1.0
        assert best.hyperparameters["k"] == 3

    def test_failing_spec_marked_not_fatal(self):
        rng = np.random.default_rng(9)
        ds, _ = cluster_dataset(rng, dim=4)
        best, results = grid_search(
            "dt", {"max_depth": [10], "criterion": ["bogus", "gini"]},
            ds, k=3, seed=0, validate=False,
        )
        assert [r.failed for r in results] == [True, False]
        assert results[0].error
        assert best.hyperparameters["criterion"] == "gini"

    def test_all_specs_fail_raises(self):
        rng = np.random.default_rng(10)
        ds, _ = cluster_dataset(rng, dim=4)
        with pytest.raises(ConfigError):
            grid_search("dt", {"criterion": ["bogus"]}, ds, k=3, seed=0, validate=False)

    def test_mean_equals_fold_mean_to_1e12(self):
        rng = np.random.default_rng(11)
        ds, _ = cluster_dataset(rng, n_classes=3, per_class=9, dim=5, spread=1.0, sep=2.0)
        _, results = grid_search("knn", {"k": [3, 7]}, ds, k=4, seed=1, validate=False)
        for r in results:
            assert abs(r.mean_accuracy - np.mean(r.fold_accuracies)) <= 1e-12

    def test_full_cartesian_grid_covered(self):
        rng = np.random.default_rng(12)
        ds, _ = cluster_dataset(rng, dim=4)
        _, results = grid_search(
            "dt", {"max_depth": [10, 20], "criterion": ["gini", "entropy"]},
            ds, k=3, seed=0, validate=False,
        )
        combos = {(r.spec.hyperparameters["max_depth"], r.spec.hyperparameters["criterion"])
                  for r in results}
        assert combos == {(10, "gini"), (20, "gini"), (10, "entropy"), (20, "entropy")}

    def test_report_round_trip(self, tmp_path):
        rng = np.random.default_rng(13)
        ds, _ = cluster_dataset(rng, dim=4)
        _, results = grid_search("knn", {"k": [1, 3]}, ds, k=3, seed=0, validate=False)
        path = tmp_path / "cv.json"
        write_cv_report(path, results)
        loaded = read_cv_report(path)
        assert len(loaded) == 2
        assert loaded[0]["spec"]["family"] == "knn"
        assert loaded[0]["mean_accuracy"] == results[0].mean_accuracy


class TestLeakage:
    def test_validation_sentinel_never_touches_fold_standardizers(self):
        rng = np.random.default_rng(14)
        ds, _ = cluster_dataset(rng, n_classes=2, per_class=15, dim=6)
        assignment = stratified_folds(ds, 5, seed=0)
        spec = ModelSpec("knn", {"k": 3})
        _, clean_models = cross_validate_spec(spec, ds, assignment, return_models=True)
        for fold in range(assignment.k):
            # poison a sentinel feature in this fold's validation rows only
            poisoned = ds.X.copy()
            poisoned[assignment.validation_indices(fold), 0] += 1e6
            ds_poisoned = LabeledDataset(X=poisoned, labels=ds.labels, class_set=ds.class_set)
            _, dirty_models = cross_validate_spec(spec, ds_poisoned, assignment, return_models=True)
            clean = clean_models[fold].standardizer
            dirty = dirty_models[fold].standardizer
            assert np.array_equal(clean.mean, dirty.mean)
            assert np.array_equal(clean.scale, dirty.scale)


class TestRefit:
    def test_refit_standardizer_is_full_data_standardizer(self):
        rng = np.random.default_rng(15)
        ds, _ = cluster_dataset(rng, dim=5)
        model = refit_best(ModelSpec("knn", {"k": 1}), ds)
        full = fit_standardizer(ds)
        assert np.array_equal(model.standardizer.mean, full.mean)
        assert np.array_equal(model.standardizer.scale, full.scale)
        assert model.n_train == ds.n

    def test_refit_k1_predicts_training_labels(self):
        rng = np.random.default_rng(16)
        ds, _ = cluster_dataset(rng, dim=5)
        model = refit_best(ModelSpec("knn", {"k": 1}), ds)
        from classgaze.classifiers import predict_batch

        assert predict_batch(model, ds.X) == list(ds.labels)

    def test_refit_deterministic(self):
        rng = np.random.default_rng(17)
        ds, _ = cluster_dataset(rng, dim=5)
        probes = rng.standard_normal((20, 5))
        from classgaze.classifiers import predict_batch

        spec = ModelSpec("rf", {"n_estimators": 4}, seed=11)
        assert predict_batch(refit_best(spec, ds), probes) == predict_batch(refit_best(spec, ds), probes)
