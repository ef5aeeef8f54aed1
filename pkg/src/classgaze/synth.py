"""Deterministic synthetic classroom sessions with known ground truth.

Everything downstream of the neural backends is planted: static face
positions per layout, a seeded teacher-scan process choosing which visible
student is attended each frame, gaze = attended face center plus Gaussian
noise, per-student unit-norm embedding clusters.  Independent RNG streams
per aspect mean one knob can change without disturbing the others' draws,
which keeps accuracy monotone in cluster separation on a fixed seed.

The attended student is always visible in its frame (occlusion re-targets
the scan), so with zero gaze noise the nearest detected face is the
attended face by construction.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigError, SessionError
from .faces import EMBEDDING_DIM, FaceObservation, write_detections
from .gaze import EyeSample, GazeSample, write_frame_timestamps, write_gaze_file
from .labels import LabelRecord, crop_id_for_line
from .mapping import AttentionRecord
from .metrics import write_truth_csv

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

LAYOUTS = ("rows", "u-shape", "small")

FRAME_INTERVAL_US = 40_000  # 25 fps scene camera
GAZE_INTERVAL_US = 20_000  # 50 Hz tracker

FACE_W = 70.0
FACE_H = 90.0


@dataclass(frozen=True)
class SynthClassroomSpec:
    n_students: int = 8
    layout: str = "rows"
    occlusion_rate: float = 0.0
    gaze_noise_px: float = 0.0
    embedding_cluster_separation: float = 8.0
    n_frames: int = 1500
    seed: int = 0
    frame_width: int = 1920
    frame_height: int = 1080
    # per-student occlusion overrides, e.g. {"S03": 1.0} removes S03 entirely
    student_occlusion: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_students < 2:
            raise ConfigError("n_students must be >= 2")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if not (0.0 <= self.occlusion_rate <= 1.0):
            raise ConfigError("occlusion_rate must be in [0, 1]")
        if self.gaze_noise_px < 0:
            raise ConfigError("gaze_noise_px must be >= 0")
        if self.embedding_cluster_separation <= 0:
            raise ConfigError("embedding_cluster_separation must be > 0")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")


def roster_for(n_students: int) -> tuple[str, ...]:
    return tuple(f"S{i + 1:02d}" for i in range(n_students))


def seat_positions(spec: SynthClassroomSpec) -> np.ndarray:
    """Static face-center coordinates per student for the chosen layout."""
    w, h = float(spec.frame_width), float(spec.frame_height)
    n = spec.n_students
    points: list[tuple[float, float]] = []
    if spec.layout == "rows":
        per_row = 6
        n_rows = (n + per_row - 1) // per_row
        for i in range(n):
            row, col = divmod(i, per_row)
            in_row = min(per_row, n - row * per_row)
            x = w * (col + 1) / (in_row + 1)
            y = h * 0.30 + row * (h * 0.55 / max(1, n_rows))
            points.append((x, y))
    elif spec.layout == "u-shape":
        side = max(1, n // 3)
        bottom = n - 2 * side
        for i in range(side):  # left arm, top to bottom
            points.append((w * 0.12, h * (0.15 + 0.7 * i / max(1, side - 1)) if side > 1 else h * 0.5))
        for i in range(bottom):  # base, left to right
            points.append((w * (0.12 + 0.76 * (i + 1) / (bottom + 1)), h * 0.92))
        for i in range(side):  # right arm, bottom to top
            points.append((w * 0.88, h * (0.85 - 0.7 * i / max(1, side - 1)) if side > 1 else h * 0.5))
    else:  # small: two near rows, generous spacing
        per_row = (n + 1) // 2
        for i in range(n):
            row, col = divmod(i, per_row)
            in_row = min(per_row, n - row * per_row)
            x = w * (col + 1) / (in_row + 1)
            y = h * (0.35 + 0.3 * row)
            points.append((x, y))
    return np.array(points[:n])


def _box_and_landmarks(cx: float, cy: float) -> tuple[tuple, tuple]:
    x1, y1 = cx - FACE_W / 2, cy - FACE_H / 2
    x2, y2 = cx + FACE_W / 2, cy + FACE_H / 2
    landmarks = (
        (cx - 0.18 * FACE_W, cy - 0.15 * FACE_H),  # left eye
        (cx + 0.18 * FACE_W, cy - 0.15 * FACE_H),  # right eye
        (cx, cy + 0.05 * FACE_H),  # nose
        (cx - 0.14 * FACE_W, cy + 0.28 * FACE_H),  # left mouth corner
        (cx + 0.14 * FACE_W, cy + 0.28 * FACE_H),  # right mouth corner
    )
    return (x1, y1, x2, y2), landmarks


@dataclass
class SynthSession:
    spec: SynthClassroomSpec
    roster: tuple[str, ...]
    positions: np.ndarray  # (n_students, 2)
    frame_timestamps: list[int]
    gaze_samples: list[GazeSample]
    detections: list[FaceObservation]  # file order; crop ids follow line order
    crop_students: list[str]  # identity per detection line
    embeddings: np.ndarray  # (n_detections, 512), row per detection line
    truth: list[tuple[int, str]]  # attended student per frame (frames with a target)
    centers: np.ndarray  # (n_students, 512) unit-norm cluster centers

    def detections_by_frame(self) -> dict[int, list[FaceObservation]]:
        grouped: dict[int, list[FaceObservation]] = {}
        for obs in self.detections:
            grouped.setdefault(obs.frame_index, []).append(obs)
        return grouped

    def crop_student_by_id(self) -> dict[str, str]:
        return {crop_id_for_line(i): s for i, s in enumerate(self.crop_students)}


def generate_session(spec: SynthClassroomSpec) -> SynthSession:
    """Build a full synthetic session; byte-stable per spec+seed."""
    roster = roster_for(spec.n_students)
    positions = seat_positions(spec)

    root = np.random.SeedSequence(spec.seed)
    occl_rng, scan_rng, gaze_rng, center_rng, embed_rng = (
        np.random.default_rng(s) for s in root.spawn(5)
    )

    occlusion_rates = np.array([
        float(spec.student_occlusion.get(s, spec.occlusion_rate)) for s in roster
    ])
    # (n_frames, n_students) visibility mask
    visible = occl_rng.random((spec.n_frames, spec.n_students)) >= occlusion_rates[None, :]

    # teacher scan: dwell on one visible student, re-target when the dwell
    # expires or the target disappears
    attended: list[Optional[int]] = []
    target: Optional[int] = None
    dwell_left = 0
    for f in range(spec.n_frames):
        candidates = np.nonzero(visible[f])[0]
        if target is None or dwell_left == 0 or not visible[f, target]:
            if candidates.shape[0] == 0:
                target = None
            else:
                target = int(candidates[scan_rng.integers(candidates.shape[0])])
                dwell_left = int(scan_rng.integers(10, 51))
        attended.append(target)
        if target is not None:
            dwell_left -= 1

    frame_timestamps = [f * FRAME_INTERVAL_US for f in range(spec.n_frames)]

    gaze_samples: list[GazeSample] = []
    for f in range(spec.n_frames):
        noise = gaze_rng.standard_normal(2) * spec.gaze_noise_px
        for sub in range(FRAME_INTERVAL_US // GAZE_INTERVAL_US):
            t = frame_timestamps[f] + sub * GAZE_INTERVAL_US
            if attended[f] is None:
                gaze_samples.append(GazeSample(t, None, None))
            else:
                gx, gy = positions[attended[f]] + noise
                eye = EyeSample(float(gx), float(gy), True)
                gaze_samples.append(GazeSample(t, eye, eye))

    detections: list[FaceObservation] = []
    crop_students: list[str] = []
    for f in range(spec.n_frames):
        for s in range(spec.n_students):
            if not visible[f, s]:
                continue
            box, landmarks = _box_and_landmarks(*positions[s])
            score = 0.99 - 0.002 * s  # strictly decreasing: detector sort is a no-op
            detections.append(FaceObservation(f, box, landmarks, score))
            crop_students.append(roster[s])

    centers = embed_unit_centers(spec.n_students, center_rng)
    min_dist = min_center_distance(centers)
    sigma = min_dist / (spec.embedding_cluster_separation * np.sqrt(EMBEDDING_DIM))
    noise = embed_rng.standard_normal((len(detections), EMBEDDING_DIM))
    student_index = {s: i for i, s in enumerate(roster)}
    rows = np.array([student_index[s] for s in crop_students], dtype=np.int64)
    if len(detections):
        raw = centers[rows] + sigma * noise
        embeddings = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    else:
        embeddings = np.zeros((0, EMBEDDING_DIM))

    truth = [(f, roster[a]) for f, a in enumerate(attended) if a is not None]

    return SynthSession(
        spec=spec,
        roster=roster,
        positions=positions,
        frame_timestamps=frame_timestamps,
        gaze_samples=gaze_samples,
        detections=detections,
        crop_students=crop_students,
        embeddings=embeddings,
        truth=truth,
        centers=centers,
    )


def embed_unit_centers(n: int, rng: np.random.Generator) -> np.ndarray:
    centers = rng.standard_normal((n, EMBEDDING_DIM))
    return centers / np.linalg.norm(centers, axis=1, keepdims=True)


def min_center_distance(centers: np.ndarray) -> float:
    n = centers.shape[0]
    best = np.inf
    for i in range(n):
        d = np.linalg.norm(centers[i + 1:] - centers[i], axis=1)
        if d.size:
            best = min(best, float(d.min()))
    return best


def scripted_labels(
    session: SynthSession,
    per_student: int = 30,
    annotator_id: str = "script",
    minute: int = 1,
) -> list[LabelRecord]:
    """Deterministic stand-in for the human labeling pass.

    Takes each student's first ``per_student`` crops from the given minute,
    in detection order; generator ground truth supplies the identities.
    """
    lo = (minute - 1) * 60_000_000
    hi = minute * 60_000_000
    counts = {s: 0 for s in session.roster}
    records: list[LabelRecord] = []
    for line, (obs, student) in enumerate(zip(session.detections, session.crop_students)):
        t = session.frame_timestamps[obs.frame_index]
        if not (lo <= t < hi) or counts[student] >= per_student:
            continue
        counts[student] += 1
        records.append(LabelRecord(
            crop_id=crop_id_for_line(line),
            frame_index=obs.frame_index,
            box=obs.box,
            student_id=student,
            annotator_id=annotator_id,
        ))
    return records


def oracle_accuracy(
    truth: Sequence[tuple[int, str]],
    records: Sequence[AttentionRecord],
) -> float:
    """Fraction of mapped frames whose prediction matches ground truth."""
    truth_by_frame = dict(truth)
    record_frames = {r.frame_index for r in records}
    missing = [f for f in truth_by_frame if f not in record_frames]
    if missing:
        raise SessionError(f"truth frame {missing[0]} outside the mapped session")
    hits = 0
    total = 0
    for r in records:
        if r.predicted is None or r.frame_index not in truth_by_frame:
            continue
        total += 1
        hits += int(r.predicted == truth_by_frame[r.frame_index])
    return hits / total if total else 0.0


# --- on-disk session ---

ROSTER_FILENAME = "roster.json"
CROPS_TRUTH_FILENAME = "crops_truth.csv"


def write_roster(path, classroom_id: str, roster: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"classroom_id": classroom_id, "students": list(roster)}, fh,
                  separators=(",", ":"))
        fh.write("\n")


def read_roster(path) -> tuple[str, list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return obj.get("classroom_id", ""), list(obj["students"])


def write_session_dir(session: SynthSession, out_dir, classroom_id: str = "synthetic") -> None:
    """Emit every artifact in the pipeline's interchange formats."""
    os.makedirs(out_dir, exist_ok=True)
    join = lambda name: os.path.join(out_dir, name)
    write_gaze_file(join("gaze.jsonl"), session.gaze_samples)
    write_frame_timestamps(join("frames.txt"), session.frame_timestamps)
    write_detections(join("plants.jsonl"), session.detections)
    np.save(join("embeddings.npy"), session.embeddings)
    write_truth_csv(join("truth.csv"), session.truth)
    write_roster(join(ROSTER_FILENAME), classroom_id, session.roster)
    with open(join(CROPS_TRUTH_FILENAME), "w", encoding="utf-8") as fh:
        fh.write("crop_id,student_id\n")
        for i, student in enumerate(session.crop_students):
            fh.write(f"{crop_id_for_line(i)},{student}\n")


def load_synth_spec_toml(path) -> SynthClassroomSpec:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    known = {
        "n_students", "layout", "occlusion_rate", "gaze_noise_px",
        "embedding_cluster_separation", "n_frames", "seed",
        "frame_width", "frame_height", "student_occlusion",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown synth spec keys: {sorted(unknown)}")
    return SynthClassroomSpec(**data)
