"""Nearest-face gaze assignment: one attended-student verdict per frame.

A frame maps when it has a resolved gaze point and at least one detected
face; the face whose box center is closest (Euclidean) to the gaze wins
and its embedding is classified.  Frames without gaze or faces are skipped
rather than guessed.  An optional distance cap can veto far assignments;
the default (no cap) always assigns the closest face.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np

from .classifiers import TrainedModel, predict
from .errors import SessionError
from .faces import FaceObservation, face_center
from .gaze import FrameGazeBinding, GazePoint

STATUS_MAPPED = "mapped"
STATUS_NO_GAZE = "skipped-no-gaze"
STATUS_NO_FACE = "skipped-no-face"
STATUS_THRESHOLD = "skipped-threshold"
STATUS_ERROR = "error"
STATUSES = (STATUS_MAPPED, STATUS_NO_GAZE, STATUS_NO_FACE, STATUS_THRESHOLD, STATUS_ERROR)


@dataclass(frozen=True)
class AttentionRecord:
    frame_index: int
    status: str
    gaze: Optional[GazePoint] = None
    chosen_face: Optional[FaceObservation] = None
    face_index: Optional[int] = None
    distance_px: Optional[float] = None
    predicted: Optional[str] = None
    error: Optional[str] = None


class EmbeddingProvider(Protocol):
    """Supplies the 512-d embedding for a detected face."""

    def embedding_for(self, frame_index: int, face_index: int, obs: FaceObservation) -> np.ndarray: ...


def nearest_face(gaze: GazePoint, faces: Sequence[FaceObservation]) -> tuple[int, float]:
    """Index and distance of the face center closest to the gaze point.

    Ties go to the lowest index.
    """
    centers = np.array([face_center(obs) for obs in faces])
    d = np.hypot(centers[:, 0] - gaze.x, centers[:, 1] - gaze.y)
    idx = int(np.argmin(d))
    return idx, float(d[idx])


def map_frame(
    binding: FrameGazeBinding,
    faces: Sequence[FaceObservation],
    model: TrainedModel,
    embeddings: EmbeddingProvider,
    max_distance_px: Optional[float] = None,
) -> AttentionRecord:
    if binding.gaze is None:
        return AttentionRecord(binding.frame_index, STATUS_NO_GAZE)
    if not faces:
        return AttentionRecord(binding.frame_index, STATUS_NO_FACE, gaze=binding.gaze)
    idx, distance = nearest_face(binding.gaze, faces)
    if max_distance_px is not None and not math.isinf(max_distance_px) and distance > max_distance_px:
        return AttentionRecord(
            binding.frame_index, STATUS_THRESHOLD, gaze=binding.gaze,
            chosen_face=faces[idx], face_index=idx, distance_px=distance,
        )
    try:
        vector = embeddings.embedding_for(binding.frame_index, idx, faces[idx])
        label = predict(model, vector)
    except Exception as exc:
        return AttentionRecord(
            binding.frame_index, STATUS_ERROR, gaze=binding.gaze,
            chosen_face=faces[idx], face_index=idx, distance_px=distance, error=str(exc),
        )
    return AttentionRecord(
        binding.frame_index, STATUS_MAPPED, gaze=binding.gaze,
        chosen_face=faces[idx], face_index=idx, distance_px=distance, predicted=label,
    )


@dataclass
class SessionSummary:
    frames: int
    status_counts: dict[str, int]
    per_student: dict[str, int]

    def to_json(self) -> dict:
        return {
            "frames": self.frames,
            "status_counts": dict(self.status_counts),
            "per_student": dict(self.per_student),
        }


def map_session(
    bindings: Sequence[FrameGazeBinding],
    detections_by_frame: Mapping[int, Sequence[FaceObservation]],
    model: TrainedModel,
    embeddings: EmbeddingProvider,
    max_distance_px: Optional[float] = None,
) -> tuple[list[AttentionRecord], SessionSummary]:
    """Map every frame in order and aggregate per-status counts."""
    frame_set = {b.frame_index for b in bindings}
    stray = sorted(set(detections_by_frame) - frame_set)
    if stray:
        raise SessionError(
            f"detections cover frame {stray[0]} which has no gaze binding; frame ranges disagree"
        )
    records: list[AttentionRecord] = []
    status_counts = {s: 0 for s in STATUSES}
    per_student: dict[str, int] = {}
    for binding in bindings:
        record = map_frame(
            binding, detections_by_frame.get(binding.frame_index, ()), model, embeddings,
            max_distance_px,
        )
        records.append(record)
        status_counts[record.status] += 1
        if record.predicted is not None:
            per_student[record.predicted] = per_student.get(record.predicted, 0) + 1
    summary = SessionSummary(
        frames=len(bindings),
        status_counts=status_counts,
        per_student=dict(sorted(per_student.items())),
    )
    return records, summary


# --- attention records file (line-delimited JSON) ---


def record_to_json(record: AttentionRecord) -> str:
    obj: dict = {"frame_index": record.frame_index, "status": record.status}
    if record.gaze is not None:
        obj["gaze"] = {"x": record.gaze.x, "y": record.gaze.y, "provenance": record.gaze.provenance}
    if record.chosen_face is not None:
        obj["face"] = {
            "index": record.face_index,
            "box": list(record.chosen_face.box),
            "score": record.chosen_face.score,
        }
        obj["distance_px"] = record.distance_px
    if record.predicted is not None:
        obj["predicted"] = record.predicted
    if record.error is not None:
        obj["error"] = record.error
    return json.dumps(obj, separators=(",", ":"))


def write_attention_records(path, records: Sequence[AttentionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record_to_json(record) + "\n")


def read_attention_predictions(path) -> dict[int, Optional[str]]:
    """frame_index -> predicted student for mapped frames, None for skips."""
    out: dict[int, Optional[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out[int(obj["frame_index"])] = obj.get("predicted")
    return out
