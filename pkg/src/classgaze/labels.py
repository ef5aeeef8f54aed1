"""Face-crop label records and their CSV persistence.

Crop ids are assigned by detections-file line order (``c000042`` is line
42, zero-based), which keeps labels, detections and precomputed embeddings
aligned without a separate index file.
"""
from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass
from typing import Sequence

from .errors import ContractError
from .faces import FaceObservation

LABELS_HEADER = ("crop_id", "frame_index", "x1", "y1", "x2", "y2",
                 "student_id", "annotator_id", "ts")


def crop_id_for_line(line_index: int) -> str:
    return f"c{line_index:06d}"


def line_for_crop_id(crop_id: str) -> int:
    if not crop_id.startswith("c"):
        raise ContractError(f"malformed crop id {crop_id!r}")
    try:
        return int(crop_id[1:])
    except ValueError as exc:
        raise ContractError(f"malformed crop id {crop_id!r}") from exc


@dataclass(frozen=True)
class Crop:
    crop_id: str
    line_index: int
    obs: FaceObservation


def crops_from_detections(observations: Sequence[FaceObservation]) -> list[Crop]:
    return [
        Crop(crop_id_for_line(i), i, obs) for i, obs in enumerate(observations)
    ]


@dataclass(frozen=True)
class LabelRecord:
    crop_id: str
    frame_index: int
    box: tuple[float, float, float, float]
    student_id: str
    annotator_id: str
    ts: float = 0.0


def write_labels_csv(path, records: Sequence[LabelRecord]) -> None:
    """Atomic write: labels land complete or not at all."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".labels-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(LABELS_HEADER)
            for r in records:
                writer.writerow([
                    r.crop_id, r.frame_index,
                    r.box[0], r.box[1], r.box[2], r.box[3],
                    r.student_id, r.annotator_id, r.ts,
                ])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_labels_csv(path) -> list[LabelRecord]:
    records: list[LabelRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(LABELS_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ContractError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            records.append(LabelRecord(
                crop_id=row["crop_id"],
                frame_index=int(row["frame_index"]),
                box=(float(row["x1"]), float(row["y1"]), float(row["x2"]), float(row["y2"])),
                student_id=row["student_id"],
                annotator_id=row["annotator_id"],
                ts=float(row["ts"]),
            ))
    return records
