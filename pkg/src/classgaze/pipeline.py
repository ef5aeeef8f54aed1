"""Wiring between session config, backends, and embedding providers."""
from __future__ import annotations

import os
from typing import Iterator, Optional, Sequence

import numpy as np

from .config import SessionConfig
from .errors import ConfigError, SessionError
from .faces import (
    AlignmentTemplate,
    BackendConfig,
    FaceObservation,
    SyntheticDetector,
    SyntheticEmbedder,
    align_face,
    embed_face,
    group_by_frame,
    read_detections,
)
from .labels import LabelRecord, crops_from_detections


def build_detector(cfg: BackendConfig, plants_path: Optional[str] = None):
    if cfg.backend_kind == "synthetic":
        plants: dict[int, list[FaceObservation]] = {}
        if plants_path and os.path.exists(plants_path):
            plants = group_by_frame(read_detections(plants_path))
        return SyntheticDetector(plants, cfg.score_threshold, cfg.nms_iou)
    from .neural import OnnxDetector

    return OnnxDetector(cfg.model_path, cfg.score_threshold, cfg.nms_iou, cfg.input_size)


def build_embedder(cfg: BackendConfig):
    if cfg.backend_kind == "synthetic":
        return SyntheticEmbedder(cfg.crop_size, cfg.normalize)
    from .neural import OnnxEmbedder

    return OnnxEmbedder(cfg.model_path, cfg.crop_size, cfg.normalize)


def backend_id(cfg: BackendConfig) -> str:
    if cfg.backend_kind == "synthetic":
        return "synthetic"
    return os.path.basename(cfg.model_path) or "neural"


def iter_frames(cfg: SessionConfig, n_frames: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (frame_index, image).

    With no frames directory (planted sessions) a 1x1 placeholder image is
    produced; synthetic detectors ignore pixels entirely.
    """
    if cfg.frames_dir:
        frames_dir = cfg.path(cfg.frames_dir)
        if not os.path.isdir(frames_dir):
            raise ConfigError(f"frames directory not found: {frames_dir}")
        from PIL import Image

        for idx in range(n_frames):
            path = os.path.join(frames_dir, f"{idx:06d}.png")
            if not os.path.exists(path):
                raise ConfigError(f"missing frame image: {path}")
            yield idx, np.asarray(Image.open(path))
    else:
        dummy = np.zeros((1, 1), dtype=np.uint8)
        for idx in range(n_frames):
            yield idx, dummy


class PrecomputedEmbeddings:
    """Embedding store aligned row-for-row with the detections file."""

    def __init__(self, detections: Sequence[FaceObservation], vectors: np.ndarray):
        if vectors.ndim != 2 or vectors.shape[0] != len(detections):
            raise SessionError(
                f"embeddings ({vectors.shape[0]} rows) do not match detections ({len(detections)})"
            )
        self.vectors = vectors
        self._line_of: dict[tuple[int, int], int] = {}
        within: dict[int, int] = {}
        for line, obs in enumerate(detections):
            slot = within.get(obs.frame_index, 0)
            self._line_of[(obs.frame_index, slot)] = line
            within[obs.frame_index] = slot + 1

    @classmethod
    def load(cls, detections_path, embeddings_path) -> "PrecomputedEmbeddings":
        return cls(read_detections(detections_path), np.load(embeddings_path))

    def embedding_for(self, frame_index: int, face_index: int, obs: FaceObservation) -> np.ndarray:
        key = (frame_index, face_index)
        if key not in self._line_of:
            raise SessionError(f"no stored embedding for frame {frame_index} face {face_index}")
        return self.vectors[self._line_of[key]]

    def embedding_for_line(self, line: int) -> np.ndarray:
        return self.vectors[line]


class ComputedEmbeddings:
    """Align-and-embed on demand from frame imagery."""

    def __init__(self, cfg: SessionConfig, embedder, template: Optional[AlignmentTemplate] = None):
        if not cfg.frames_dir:
            raise ConfigError("computed embeddings need a frames directory")
        self.cfg = cfg
        self.embedder = embedder
        self.template = template or AlignmentTemplate(crop_size=embedder.crop_size)
        self._cache: dict[int, np.ndarray] = {}

    def _frame(self, idx: int) -> np.ndarray:
        if idx not in self._cache:
            from PIL import Image

            path = os.path.join(self.cfg.path(self.cfg.frames_dir), f"{idx:06d}.png")
            self._cache.clear()  # keep at most one decoded frame
            self._cache[idx] = np.asarray(Image.open(path))
        return self._cache[idx]

    def embedding_for(self, frame_index: int, face_index: int, obs: FaceObservation) -> np.ndarray:
        crop = align_face(self._frame(frame_index), obs, self.template)
        return embed_face(self.embedder, crop)


def embedding_provider(cfg: SessionConfig, detections: Sequence[FaceObservation]):
    embeddings_path = cfg.path(cfg.embeddings_file) if cfg.embeddings_file else ""
    if embeddings_path and os.path.exists(embeddings_path):
        return PrecomputedEmbeddings(detections, np.load(embeddings_path))
    return ComputedEmbeddings(cfg, build_embedder(cfg.embedder))


def dataset_from_labels(
    labels: Sequence[LabelRecord],
    detections: Sequence[FaceObservation],
    provider,
    roster: Sequence[str],
):
    """Assemble the training set for the labeled crops.

    Class order follows the roster so ties resolve by seating chart, not
    label order; students without labels are dropped from the class set.
    """
    from .classifiers import LabeledDataset
    from .labels import line_for_crop_id

    crops = crops_from_detections(detections)
    vectors = []
    students = []
    for record in labels:
        line = line_for_crop_id(record.crop_id)
        if line >= len(crops):
            raise SessionError(f"label references unknown crop {record.crop_id}")
        obs = crops[line].obs
        if hasattr(provider, "embedding_for_line"):
            vectors.append(provider.embedding_for_line(line))
        else:
            vectors.append(provider.embedding_for(obs.frame_index, _slot_of(crops, line), obs))
        students.append(record.student_id)
    labeled = set(students)
    class_set = tuple(s for s in roster if s in labeled)
    unknown = labeled - set(class_set)
    if unknown:
        raise SessionError(f"labels reference students outside the roster: {sorted(unknown)}")
    return LabeledDataset(X=np.vstack(vectors), labels=tuple(students), class_set=class_set)


def _slot_of(crops, line: int) -> int:
    frame = crops[line].obs.frame_index
    slot = 0
    for c in crops[:line]:
        if c.obs.frame_index == frame:
            slot += 1
    return slot
