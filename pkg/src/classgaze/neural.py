"""ONNX adapters for the neural detector and embedder backends.

These wrap serialized-graph exports of the usual one-stage face detector
(stride 8/16/32 anchor-free heads with box distances and five keypoints)
and a 512-d recognition network expecting 112x112 RGB crops normalized to
[-1, 1].  The models are consumed as opaque inference engines; everything
here is pre/post-processing.  ``onnxruntime`` is imported lazily so the
synthetic-only test suite never needs it.
"""
from __future__ import annotations

import os

import numpy as np

from .errors import BackendError
from .faces import EMBEDDING_DIM, FaceObservation


def _load_session(model_path: str):
    if not model_path or not os.path.exists(model_path):
        raise BackendError(f"model file not found: {model_path!r}")
    try:
        import onnxruntime as ort
    except ImportError as exc:
        raise BackendError("onnxruntime is required for neural backends") from exc
    return ort.InferenceSession(model_path, providers=["CPUExecutionProvider"])


def _letterbox(frame: np.ndarray, size: int) -> tuple[np.ndarray, float]:
    h, w = frame.shape[:2]
    scale = min(size / w, size / h)
    new_w, new_h = int(round(w * scale)), int(round(h * scale))
    ys = (np.arange(new_h) / scale).astype(np.int64).clip(0, h - 1)
    xs = (np.arange(new_w) / scale).astype(np.int64).clip(0, w - 1)
    resized = frame[ys][:, xs]
    canvas = np.zeros((size, size) + frame.shape[2:], dtype=frame.dtype)
    canvas[:new_h, :new_w] = resized
    return canvas, scale


class OnnxDetector:
    """Anchor-free one-stage face detector from an ONNX export."""

    STRIDES = (8, 16, 32)
    ANCHORS_PER_CELL = 2

    def __init__(
        self,
        model_path: str,
        score_threshold: float = 0.5,
        nms_iou: float = 0.4,
        input_size: int = 640,
    ):
        self.session = _load_session(model_path)
        self.input_name = self.session.get_inputs()[0].name
        self.score_threshold = score_threshold
        self.nms_iou = nms_iou
        self.input_size = input_size

    def detect(self, frame: np.ndarray, frame_index: int) -> list[FaceObservation]:
        img, scale = _letterbox(frame, self.input_size)
        if img.ndim == 2:
            img = np.repeat(img[:, :, None], 3, axis=2)
        blob = (img[:, :, ::-1].astype(np.float32) - 127.5) / 128.0
        blob = blob.transpose(2, 0, 1)[None]
        outputs = self.session.run(None, {self.input_name: blob})
        # outputs: per stride [scores, bbox distances, keypoint offsets]
        n_levels = len(self.STRIDES)
        observations: list[FaceObservation] = []
        for level, stride in enumerate(self.STRIDES):
            scores = outputs[level].reshape(-1)
            bboxes = outputs[level + n_levels].reshape(-1, 4) * stride
            kps = outputs[level + 2 * n_levels].reshape(-1, 10) * stride
            grid = self.input_size // stride
            cx, cy = np.meshgrid(np.arange(grid), np.arange(grid))
            centers = np.stack([cx.ravel(), cy.ravel()], axis=-1).astype(np.float32) * stride
            centers = np.repeat(centers, self.ANCHORS_PER_CELL, axis=0)
            keep = scores >= self.score_threshold
            for c, s, bb, kp in zip(centers[keep], scores[keep], bboxes[keep], kps[keep]):
                x1, y1 = (c[0] - bb[0]) / scale, (c[1] - bb[1]) / scale
                x2, y2 = (c[0] + bb[2]) / scale, (c[1] + bb[3]) / scale
                if x2 <= x1 or y2 <= y1:
                    continue
                points = tuple(
                    ((c[0] + kp[2 * i]) / scale, (c[1] + kp[2 * i + 1]) / scale) for i in range(5)
                )
                observations.append(
                    FaceObservation(frame_index, (x1, y1, x2, y2), points, float(min(s, 1.0)))
                )
        return observations


class OnnxEmbedder:
    """512-d recognition embedder from an ONNX export."""

    def __init__(self, model_path: str, crop_size: int = 112, normalize: bool = True):
        self.session = _load_session(model_path)
        self.input_name = self.session.get_inputs()[0].name
        self.crop_size = crop_size
        self.normalize = normalize

    def embed(self, crop: np.ndarray) -> np.ndarray:
        if crop.ndim == 2:
            crop = np.repeat(crop[:, :, None], 3, axis=2)
        blob = (crop[:, :, ::-1].astype(np.float32) - 127.5) / 127.5
        blob = blob.transpose(2, 0, 1)[None]
        out = self.session.run(None, {self.input_name: blob})[0].ravel().astype(np.float64)
        if out.shape[0] != EMBEDDING_DIM:
            raise BackendError(f"embedder produced {out.shape[0]} dims, expected {EMBEDDING_DIM}")
        if self.normalize:
            norm = np.linalg.norm(out)
            if norm > 0:
                out = out / norm
        return out
