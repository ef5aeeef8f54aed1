import filecmp
import json
import os

import pytest

from classgaze.cli import main


def run(argv):
    return main([str(a) for a in argv])


def make_session(tmp_path, name="sess", frames=200, students=3, seed=5, extra=()):
    out = tmp_path / name
    code = run(["synth", "--out", out, "--students", students, "--frames", frames,
                "--seed", seed, "--labels-per-student", 30, *extra])
    assert code == 0
    return out


class TestSynthCommand:
    def test_writes_session_files(self, tmp_path):
        out = make_session(tmp_path)
        for name in ("gaze.jsonl", "frames.txt", "plants.jsonl", "embeddings.npy",
                     "truth.csv", "roster.json", "session.toml", "labels.csv"):
            assert (out / name).exists(), name

    def test_spec_toml_input(self, tmp_path):
        spec = tmp_path / "spec.toml"
        spec.write_text(
            'n_students = 3\nlayout = "u-shape"\nn_frames = 50\nseed = 2\n', encoding="utf-8"
        )
        assert run(["synth", "--spec", spec, "--out", tmp_path / "s"]) == 0
        assert len((tmp_path / "s" / "frames.txt").read_text().splitlines()) == 50

    def test_rerun_byte_identical(self, tmp_path):
        a = make_session(tmp_path, "a")
        b = make_session(tmp_path, "b")
        for name in os.listdir(a):
            assert filecmp.cmp(a / name, b / name, shallow=False), name


class TestDetectCommand:
    def test_detections_equal_plants(self, tmp_path):
        out = make_session(tmp_path)
        assert run(["detect", "--config", out / "session.toml"]) == 0
        assert filecmp.cmp(out / "detections.jsonl", out / "plants.jsonl", shallow=False)

    def test_rerun_byte_identical(self, tmp_path):
        out = make_session(tmp_path)
        assert run(["detect", "--config", out / "session.toml"]) == 0
        first = (out / "detections.jsonl").read_bytes()
        assert run(["detect", "--config", out / "session.toml"]) == 0
        assert (out / "detections.jsonl").read_bytes() == first

    def test_missing_frames_dir_exit_2_names_path(self, tmp_path, capsys):
        out = make_session(tmp_path)
        config = (out / "session.toml").read_text()
        config = config.replace("[paths]", '[paths]\nframes = "no-such-dir"')
        (out / "session.toml").write_text(config)
        assert run(["detect", "--config", out / "session.toml"]) == 2
        assert "no-such-dir" in capsys.readouterr().err


class TestTrainCommand:
    def test_knn_artifact_matches_brute_force_oracle(self, tmp_path):
        import numpy as np

        from classgaze.classifiers import load_model, predict, standardize
        from tests.test_classifiers import knn_oracle

        out = make_session(tmp_path)
        assert run(["detect", "--config", out / "session.toml"]) == 0
        assert run(["train", "--config", out / "session.toml", "--family", "knn"]) == 0
        model = load_model(out / "models" / "knn.json")
        k = model.spec.hyperparameters["k"]
        vectors = np.load(out / "embeddings.npy")
        Xs = model.impl.X  # standardized training set stored by the model
        labels = [model.class_set[i] for i in model.impl.y]
        rng = np.random.default_rng(0)
        for row in rng.choice(vectors.shape[0], size=15, replace=False):
            z = standardize(model.standardizer, vectors[row])
            assert predict(model, vectors[row]) == knn_oracle(Xs, labels, model.class_set, z, k)

    def test_one_class_labels_refused(self, tmp_path, capsys):
        out = make_session(tmp_path)
        assert run(["detect", "--config", out / "session.toml"]) == 0
        labels = (out / "labels.csv").read_text().splitlines()
        header, rows = labels[0], [r for r in labels[1:] if ",S01," in r]
        (out / "labels.csv").write_text("\n".join([header] + rows) + "\n")
        assert run(["train", "--config", out / "session.toml", "--family", "knn"]) == 2
        assert "2 students" in capsys.readouterr().err

    def test_fixed_seed_rerun_identical_artifact_bytes(self, tmp_path):
        out = make_session(tmp_path)
        assert run(["detect", "--config", out / "session.toml"]) == 0
        args = ["train", "--config", out / "session.toml", "--family", "knn", "--seed", 9]
        assert run(args) == 0
        first = (out / "models" / "knn.json").read_bytes()
        cv_first = (out / "reports" / "cv_knn.json").read_bytes()
        assert run(args) == 0
        assert (out / "models" / "knn.json").read_bytes() == first
        assert (out / "reports" / "cv_knn.json").read_bytes() == cv_first

    def test_missing_labels_exit_2(self, tmp_path, capsys):
        out = make_session(tmp_path)
        (out / "labels.csv").unlink()
        assert run(["detect", "--config", out / "session.toml"]) == 0
        assert run(["train", "--config", out / "session.toml", "--family", "knn"]) == 2
        assert "labels" in capsys.readouterr().err


@pytest.fixture()
def full_run(tmp_path):
    out = make_session(tmp_path, frames=300, students=4)
    assert run(["detect", "--config", out / "session.toml"]) == 0
    assert run(["train", "--config", out / "session.toml", "--family", "knn"]) == 0
    assert run(["map", "--config", out / "session.toml", "--family", "knn"]) == 0
    assert run(["evaluate", "--pred", out / "attention.jsonl", "--truth", out / "truth.csv",
                "--out", out / "reports" / "report.json"]) == 0
    return out


class TestMapEvaluate:
    def test_zero_noise_end_to_end_accuracy_one(self, full_run):
        report = json.loads((full_run / "reports" / "report.json").read_text())
        assert report["accuracy"] == 1.0
        assert report["n_train"] > 0

    def test_markdown_row_emitted(self, full_run, capsys):
        assert run(["report", "--report", full_run / "reports" / "report.json",
                    "--format", "markdown"]) == 0
        text = capsys.readouterr().out
        assert text.startswith("| Classroom ID | Classifier | Facial Feature Embeddings |")

    def test_confusion_csv_render(self, full_run, tmp_path):
        dest = tmp_path / "cm.csv"
        assert run(["report", "--report", full_run / "reports" / "report.json",
                    "--format", "csv", "--out", dest]) == 0
        lines = dest.read_text().strip().splitlines()
        report = json.loads((full_run / "reports" / "report.json").read_text())
        assert len(lines) == 1 + len(report["confusion"]["class_set"])

    def test_map_rerun_byte_identical(self, full_run):
        att = (full_run / "attention.jsonl").read_bytes()
        summary = (full_run / "attention.jsonl.summary.json").read_bytes()
        assert run(["map", "--config", full_run / "session.toml", "--family", "knn"]) == 0
        assert (full_run / "attention.jsonl").read_bytes() == att
        assert (full_run / "attention.jsonl.summary.json").read_bytes() == summary

    def test_evaluate_mismatched_range_names_missing_frame(self, full_run, capsys):
        truth = (full_run / "truth.csv").read_text().splitlines()
        truth.append("999999,S01")
        bad = full_run / "truth_bad.csv"
        bad.write_text("\n".join(truth) + "\n")
        assert run(["evaluate", "--pred", full_run / "attention.jsonl", "--truth", bad,
                    "--out", full_run / "r2.json"]) == 2
        assert "999999" in capsys.readouterr().err

    def test_double_coded_kappa(self, full_run, capsys):
        # second annotation file disagreeing on a quarter of the frames
        rows = (full_run / "truth.csv").read_text().splitlines()
        header, body = rows[0], rows[1:]
        roster = ["S01", "S02", "S03", "S04"]
        flipped = []
        for i, row in enumerate(body):
            frame, student = row.split(",")
            if i % 4 == 0:
                student = roster[(roster.index(student) + 1) % len(roster)]
            flipped.append(f"{frame},{student}")
        second = full_run / "truth2.csv"
        second.write_text("\n".join([header] + flipped) + "\n")
        assert run(["evaluate", "--pred", full_run / "attention.jsonl",
                    "--truth", full_run / "truth.csv", "--truth2", second,
                    "--out", full_run / "r3.json"]) == 0
        out = capsys.readouterr().out
        assert "kappa" in out
        report = json.loads((full_run / "r3.json").read_text())
        assert 0.0 < report["kappa"] < 1.0

    def test_missing_model_exit_2(self, tmp_path, capsys):
        out = make_session(tmp_path)
        assert run(["map", "--config", out / "session.toml", "--family", "knn"]) == 2
        assert "model" in capsys.readouterr().err
