"""Face detection, five-point alignment, and embedding extraction.

Detector and embedder are pluggable backends.  The synthetic backends ship
in-repo and replay planted observations / derive embeddings from crop
content, so the whole pipeline runs and tests without any model download.
Neural backends adapt ONNX exports of the usual detection + recognition
stacks and are loaded lazily; they are opaque inference engines here, never
trained or fine-tuned.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import BackendError, ContractError, DegenerateGeometryError

EMBEDDING_DIM = 512

# Conventional five-point destination template for a 112x112 recognition
# crop, ordered [left eye, right eye, nose tip, left mouth, right mouth].
DEFAULT_TEMPLATE_POINTS = (
    (38.2946, 51.6963),
    (73.5318, 51.5014),
    (56.0252, 71.7366),
    (41.5493, 92.3655),
    (70.7299, 92.2041),
)


@dataclass(frozen=True)
class FaceObservation:
    frame_index: int
    box: tuple[float, float, float, float]  # x1, y1, x2, y2
    landmarks: tuple[tuple[float, float], ...]  # 5 points
    score: float

    def __post_init__(self):
        x1, y1, x2, y2 = self.box
        if not (x1 < x2 and y1 < y2):
            raise ContractError(f"box corners not ordered: {self.box}")
        if len(self.landmarks) != 5:
            raise ContractError(f"expected 5 landmarks, got {len(self.landmarks)}")
        if not (0.0 <= self.score <= 1.0):
            raise ContractError(f"score outside [0, 1]: {self.score}")


@dataclass(frozen=True)
class AlignmentTemplate:
    points: tuple[tuple[float, float], ...] = DEFAULT_TEMPLATE_POINTS
    crop_size: int = 112

    def __post_init__(self):
        for x, y in self.points:
            if not (0 < x < self.crop_size and 0 < y < self.crop_size):
                raise ContractError("template points must lie strictly inside the crop")


def face_center(obs: FaceObservation) -> tuple[float, float]:
    """Midpoint of the detection box; the anchor for gaze distance."""
    x1, y1, x2, y2 = obs.box
    return ((x1 + x2) / 2.0, (y1 + y2) / 2.0)


def box_iou(a: Sequence[float], b: Sequence[float]) -> float:
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    iw, ih = max(0.0, ix2 - ix1), max(0.0, iy2 - iy1)
    inter = iw * ih
    if inter == 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def nms(candidates: Sequence[FaceObservation], iou_threshold: float) -> list[FaceObservation]:
    """Greedy non-maximum suppression by descending score.

    No two survivors overlap with IoU above the threshold; output order is
    score-descending, ties kept in input order.  Idempotent.
    """
    if not (0.0 < iou_threshold < 1.0):
        raise ContractError(f"iou_threshold must be in (0, 1): {iou_threshold}")
    order = sorted(range(len(candidates)), key=lambda i: (-candidates[i].score, i))
    kept: list[FaceObservation] = []
    for i in order:
        obs = candidates[i]
        if all(box_iou(obs.box, k.box) <= iou_threshold for k in kept):
            kept.append(obs)
    return kept


class DetectorBackend(Protocol):
    score_threshold: float
    nms_iou: float

    def detect(self, frame: np.ndarray, frame_index: int) -> list[FaceObservation]: ...


class EmbedderBackend(Protocol):
    crop_size: int

    def embed(self, crop: np.ndarray) -> np.ndarray: ...


def detect_faces(backend: DetectorBackend, frame: np.ndarray, frame_index: int = 0) -> list[FaceObservation]:
    """Run a detector backend on one frame.

    Output is NMS-filtered, score-thresholded, and sorted by descending
    score; deterministic for a fixed backend and frame.
    """
    if frame is None or frame.size == 0:
        raise ContractError("frame must be a non-empty image array")
    try:
        raw = backend.detect(frame, frame_index)
    except ContractError:
        raise
    except Exception as exc:
        raise BackendError(f"detector failed on frame {frame_index}: {exc}") from exc
    kept = nms([o for o in raw if o.score >= backend.score_threshold], backend.nms_iou)
    return sorted(kept, key=lambda o: -o.score)


class SyntheticDetector:
    """Replays planted observations keyed by frame index.

    Stands in for a neural detector so sessions with no real imagery still
    exercise the full detection contract (thresholding, NMS, ordering).
    """

    def __init__(
        self,
        plants: Mapping[int, Sequence[FaceObservation]],
        score_threshold: float = 0.5,
        nms_iou: float = 0.4,
    ):
        self.plants = {int(k): list(v) for k, v in plants.items()}
        self.score_threshold = score_threshold
        self.nms_iou = nms_iou

    def detect(self, frame: np.ndarray, frame_index: int) -> list[FaceObservation]:
        return list(self.plants.get(frame_index, []))


class SyntheticEmbedder:
    """Crop-mean-seeded Gaussian embeddings: deterministic per crop content."""

    def __init__(self, crop_size: int = 112, normalize: bool = True):
        self.crop_size = crop_size
        self.normalize = normalize

    def embed(self, crop: np.ndarray) -> np.ndarray:
        digest = hashlib.blake2b(
            np.ascontiguousarray(crop).tobytes() + str(crop.shape).encode(),
            digest_size=8,
        ).digest()
        seed = int.from_bytes(digest, "big") ^ int(round(float(np.mean(crop)) * 1024.0))
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(EMBEDDING_DIM)
        return l2_normalize(v) if self.normalize else v


def embed_face(backend: EmbedderBackend, crop: np.ndarray) -> np.ndarray:
    """Embed an aligned crop into the 512-d identity space."""
    if crop.shape[0] != backend.crop_size or crop.shape[1] != backend.crop_size:
        raise ContractError(
            f"crop is {crop.shape[1]}x{crop.shape[0]}, backend expects {backend.crop_size}"
        )
    try:
        v = np.asarray(backend.embed(crop), dtype=np.float64)
    except ContractError:
        raise
    except Exception as exc:
        raise BackendError(f"embedder failed: {exc}") from exc
    if v.shape != (EMBEDDING_DIM,):
        raise ContractError(f"embedder returned shape {v.shape}, expected ({EMBEDDING_DIM},)")
    return v


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateGeometryError("cannot normalize a zero vector")
    return v / norm


def estimate_similarity_transform(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Least-squares similarity fit (scale * rotation + translation), 2x3.

    Minimizes sum ||s R p_i + t - q_i||^2 over s > 0, proper rotation R and
    translation t (Umeyama's closed form via SVD of the cross-covariance).
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ContractError(f"point sets must both be (N, 2), got {src.shape} and {dst.shape}")
    n = src.shape[0]
    src_mean = src.mean(axis=0)
    dst_mean = dst.mean(axis=0)
    src_demean = src - src_mean
    dst_demean = dst - dst_mean
    src_var = (src_demean**2).sum() / n
    if src_var <= 0.0:
        raise DegenerateGeometryError("source points are coincident")

    cov = dst_demean.T @ src_demean / n
    u, s, vt = np.linalg.svd(cov)
    d = np.ones(2)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        d[1] = -1.0
    rotation = u @ np.diag(d) @ vt
    scale = float(s @ d) / src_var
    if scale <= 0.0:
        raise DegenerateGeometryError("similarity fit collapsed to non-positive scale")
    translation = dst_mean - scale * rotation @ src_mean
    out = np.empty((2, 3))
    out[:, :2] = scale * rotation
    out[:, 2] = translation
    return out


def apply_transform(matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return points @ matrix[:, :2].T + matrix[:, 2]


def _invert_similarity(matrix: np.ndarray) -> np.ndarray:
    linear = matrix[:, :2]
    inv_linear = np.linalg.inv(linear)
    out = np.empty((2, 3))
    out[:, :2] = inv_linear
    out[:, 2] = -inv_linear @ matrix[:, 2]
    return out


def warp_affine(frame: np.ndarray, matrix: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Inverse-map bilinear warp; samples outside the frame read as black."""
    inv = _invert_similarity(matrix)
    us, vs = np.meshgrid(np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64))
    sx = inv[0, 0] * us + inv[0, 1] * vs + inv[0, 2]
    sy = inv[1, 0] * us + inv[1, 1] * vs + inv[1, 2]

    h, w = frame.shape[:2]
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0

    img = frame.astype(np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    channels = img.shape[2]
    out = np.zeros((out_h, out_w, channels))
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            xi_c = np.clip(xi, 0, w - 1)
            yi_c = np.clip(yi, 0, h - 1)
            sample = img[yi_c, xi_c] * inside[:, :, None]
            out += weight[:, :, None] * sample
    if frame.ndim == 2:
        out = out[:, :, 0]
    if np.issubdtype(frame.dtype, np.integer):
        out = np.clip(np.rint(out), np.iinfo(frame.dtype).min, np.iinfo(frame.dtype).max)
    return out.astype(frame.dtype)


def align_face(
    frame: np.ndarray,
    obs: FaceObservation,
    template: AlignmentTemplate = AlignmentTemplate(),
) -> np.ndarray:
    """Warp a face to the canonical crop using its five landmarks."""
    matrix = estimate_similarity_transform(
        np.asarray(obs.landmarks, dtype=np.float64),
        np.asarray(template.points, dtype=np.float64),
    )
    return warp_affine(frame, matrix, template.crop_size, template.crop_size)


# --- detections cache (line-delimited JSON, bit-exact round-trip) ---


def observation_to_json(obs: FaceObservation) -> str:
    return json.dumps(
        {
            "frame_index": obs.frame_index,
            "box": list(obs.box),
            "landmarks": [list(p) for p in obs.landmarks],
            "score": obs.score,
        },
        separators=(",", ":"),
    )


def observation_from_json(line: str) -> FaceObservation:
    obj = json.loads(line)
    return FaceObservation(
        frame_index=int(obj["frame_index"]),
        box=tuple(float(v) for v in obj["box"]),
        landmarks=tuple((float(x), float(y)) for x, y in obj["landmarks"]),
        score=float(obj["score"]),
    )


def write_detections(path, observations: Iterable[FaceObservation]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obs in observations:
            fh.write(observation_to_json(obs) + "\n")


def read_detections(path) -> list[FaceObservation]:
    out: list[FaceObservation] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(observation_from_json(line))
    return out


def group_by_frame(observations: Iterable[FaceObservation]) -> dict[int, list[FaceObservation]]:
    grouped: dict[int, list[FaceObservation]] = {}
    for obs in observations:
        grouped.setdefault(obs.frame_index, []).append(obs)
    return grouped


@dataclass
class BackendConfig:
    """Detector/embedder configuration as read from session TOML."""

    backend_kind: str = "synthetic"
    model_path: str = ""
    score_threshold: float = 0.5
    nms_iou: float = 0.4
    input_size: int = 640
    crop_size: int = 112
    normalize: bool = True
    extra: dict = field(default_factory=dict)
