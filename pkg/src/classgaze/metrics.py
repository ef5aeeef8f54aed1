"""Agreement and classification metrics for attended-student verdicts.

Precision/recall/F1 use support-weighted averaging by default, under which
weighted recall coincides with accuracy; macro averaging is available for
comparison.  A class nobody predicted contributes per-class precision 0
instead of being dropped, so missing identities pull the averages down.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    class_set: tuple[str, ...]
    counts: np.ndarray  # rows = true class, columns = predicted class

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.class_set == other.class_set and np.array_equal(self.counts, other.counts)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.class_set)
        if counts.shape != (n, n):
            raise ContractError(f"counts shape {counts.shape} does not match {n} classes")
        if np.any(counts < 0):
            raise ContractError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_json(self) -> dict:
        return {"class_set": list(self.class_set), "counts": self.counts.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "ConfusionMatrix":
        return ConfusionMatrix(tuple(obj["class_set"]), np.array(obj["counts"], dtype=np.int64))


def confusion_matrix(
    truth: Sequence[str], pred: Sequence[str], class_set: Sequence[str]
) -> ConfusionMatrix:
    """counts[i][j] = occurrences of (truth=class_i, predicted=class_j)."""
    if len(truth) != len(pred):
        raise ContractError(f"length mismatch: {len(truth)} truth vs {len(pred)} predictions")
    index = {c: i for i, c in enumerate(class_set)}
    counts = np.zeros((len(class_set), len(class_set)), dtype=np.int64)
    for t, p in zip(truth, pred):
        if t not in index:
            raise ContractError(f"truth label {t!r} not in class_set")
        if p not in index:
            raise ContractError(f"predicted label {p!r} not in class_set")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(tuple(class_set), counts)


def per_class_metrics(cm: ConfusionMatrix) -> dict[str, dict[str, float]]:
    """Per-class precision/recall/F1/support, keyed by class id.

    The review UI displays these as served; it never derives metrics from
    the raw counts itself.
    """
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    out: dict[str, dict[str, float]] = {}
    for i, cls in enumerate(cm.class_set):
        precision = float(diag[i] / predicted[i]) if predicted[i] > 0 else 0.0
        recall = float(diag[i] / support[i]) if support[i] > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        out[cls] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": int(support[i]),
        }
    return out


def metrics(cm: ConfusionMatrix, average: str = "weighted") -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1) from a confusion matrix.

    Per-class precision is 0 for classes never predicted; per-class F1 is 0
    when precision and recall are both 0.
    """
    if average not in ("weighted", "macro"):
        raise ContractError(f"average must be 'weighted' or 'macro', got {average!r}")
    total = cm.total
    if total == 0:
        raise ContractError("empty confusion matrix")
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    precision_c = np.where(predicted > 0, diag / np.where(predicted > 0, predicted, 1.0), 0.0)
    recall_c = np.where(support > 0, diag / np.where(support > 0, support, 1.0), 0.0)
    denom = precision_c + recall_c
    f1_c = np.where(denom > 0, 2.0 * precision_c * recall_c / np.where(denom > 0, denom, 1.0), 0.0)

    accuracy = float(diag.sum() / total)
    if average == "weighted":
        weights = support / total
    else:
        present = support > 0
        weights = np.where(present, 1.0 / max(1, int(present.sum())), 0.0)
    precision = float(np.sum(weights * precision_c))
    recall = float(np.sum(weights * recall_c))
    f1 = float(np.sum(weights * f1_c))
    return accuracy, precision, recall, f1


def cohen_kappa(rater1: Sequence[str], rater2: Sequence[str]) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    Expected agreement p_e comes from the raters' marginal label
    frequencies; total agreement with degenerate marginals (p_e = 1)
    returns 1.0 rather than 0/0.
    """
    if len(rater1) != len(rater2):
        raise ContractError(f"length mismatch: {len(rater1)} vs {len(rater2)}")
    if len(rater1) == 0:
        raise ContractError("kappa needs at least one pair")
    n = len(rater1)
    labels = sorted(set(rater1) | set(rater2))
    p_o = sum(1 for a, b in zip(rater1, rater2) if a == b) / n
    p_e = 0.0
    for label in labels:
        p_e += (sum(1 for a in rater1 if a == label) / n) * (
            sum(1 for b in rater2 if b == label) / n
        )
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class EvaluationReport:
    classroom_id: str
    classifier_family: str
    embedding_backend: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: ConfusionMatrix
    n_train: int
    n_test: int
    frames: tuple[tuple[int, str, str], ...] = ()  # (frame_index, truth, predicted)
    kappa: Optional[float] = None

    def to_json(self) -> dict:
        obj = {
            "format": "classgaze-report",
            "version": 1,
            "classroom_id": self.classroom_id,
            "classifier": self.classifier_family,
            "embeddings": self.embedding_backend,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": self.confusion.to_json(),
            "per_class": per_class_metrics(self.confusion),
            "n_train": self.n_train,
            "n_test": self.n_test,
            "frames": [list(f) for f in self.frames],
        }
        if self.kappa is not None:
            obj["kappa"] = self.kappa
        return obj

    @staticmethod
    def from_json(obj: dict) -> "EvaluationReport":
        if obj.get("format") != "classgaze-report":
            raise ContractError(f"not an evaluation report: format={obj.get('format')!r}")
        return EvaluationReport(
            classroom_id=obj["classroom_id"],
            classifier_family=obj["classifier"],
            embedding_backend=obj["embeddings"],
            accuracy=obj["accuracy"],
            precision=obj["precision"],
            recall=obj["recall"],
            f1=obj["f1"],
            confusion=ConfusionMatrix.from_json(obj["confusion"]),
            n_train=obj["n_train"],
            n_test=obj["n_test"],
            frames=tuple((int(f[0]), f[1], f[2]) for f in obj.get("frames", [])),
            kappa=obj.get("kappa"),
        )


def evaluate_predictions(
    truth: Sequence[tuple[int, str]],
    predictions: dict[int, Optional[str]],
    classroom_id: str = "",
    classifier_family: str = "",
    embedding_backend: str = "",
    n_train: int = 0,
    class_set: Optional[Sequence[str]] = None,
) -> EvaluationReport:
    """Join ground truth with mapped predictions on frame index.

    Frames the mapper skipped (no gaze / no face) are excluded, matching
    the protocol of only scoring frames where assignment was attempted.
    A truth frame with no attention record at all means the inputs cover
    different frame ranges and is an error.
    """
    missing = [frame for frame, _ in truth if frame not in predictions]
    if missing:
        raise ContractError(
            f"truth frame {missing[0]} has no attention record; frame ranges disagree"
        )
    pairs = [
        (frame, label, predictions[frame])
        for frame, label in truth
        if predictions.get(frame) is not None
    ]
    if not pairs:
        raise ContractError("no overlapping mapped frames between truth and predictions")
    truth_labels = [t for _, t, _ in pairs]
    pred_labels = [p for _, _, p in pairs]
    if class_set is None:
        seen: dict[str, None] = {}
        for label in truth_labels + pred_labels:
            seen.setdefault(label)
        class_set = tuple(sorted(seen))
    cm = confusion_matrix(truth_labels, pred_labels, class_set)
    accuracy, precision, recall, f1 = metrics(cm)
    return EvaluationReport(
        classroom_id=classroom_id,
        classifier_family=classifier_family,
        embedding_backend=embedding_backend,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=cm,
        n_train=n_train,
        n_test=len(pairs),
        frames=tuple((frame, t, p) for frame, t, p in pairs),
    )


# --- ground truth files and report rendering ---


def read_truth_csv(path) -> list[tuple[int, str]]:
    """CSV with header: frame_index,student_id[,annotator_id,ts]."""
    rows: list[tuple[int, str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "frame_index" not in reader.fieldnames:
            raise ContractError(f"{path}: missing frame_index column")
        for row in reader:
            rows.append((int(row["frame_index"]), row["student_id"]))
    return rows


def write_truth_csv(path, rows: Sequence[tuple[int, str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_index", "student_id"])
        for frame, student in rows:
            writer.writerow([frame, student])


def render_report_json(report: EvaluationReport) -> str:
    return json.dumps(report.to_json(), separators=(",", ":")) + "\n"


def render_confusion_csv(cm: ConfusionMatrix) -> str:
    """Header row of class ids, then one row per true class."""
    lines = ["true\\pred," + ",".join(cm.class_set)]
    for i, cls in enumerate(cm.class_set):
        lines.append(cls + "," + ",".join(str(int(v)) for v in cm.counts[i]))
    return "\n".join(lines) + "\n"


REPORT_COLUMNS = ("Classroom ID", "Classifier", "Facial Feature Embeddings",
                  "Accuracy", "Precision", "Recall", "F1 score")


def render_report_markdown(report: EvaluationReport) -> str:
    """One metrics row in the canonical column order."""
    header = "| " + " | ".join(REPORT_COLUMNS) + " |"
    rule = "|" + "|".join(["---"] * len(REPORT_COLUMNS)) + "|"
    row = "| {} | {} | {} | {:.2f} | {:.2f} | {:.2f} | {:.2f} |".format(
        report.classroom_id, report.classifier_family, report.embedding_backend,
        report.accuracy, report.precision, report.recall, report.f1,
    )
    return "\n".join([header, rule, row]) + "\n"


def render_report(report: EvaluationReport, fmt: str) -> str:
    if fmt == "json":
        return render_report_json(report)
    if fmt == "csv":
        return render_confusion_csv(report.confusion)
    if fmt in ("markdown", "markdown-table", "md"):
        return render_report_markdown(report)
    raise ContractError(f"unknown report format {fmt!r}")


def load_report(path) -> EvaluationReport:
    with open(path, "r", encoding="utf-8") as fh:
        return EvaluationReport.from_json(json.load(fh))
