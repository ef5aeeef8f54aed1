"""Parsing and time-alignment of mobile eye-tracker gaze exports.

The on-disk gaze format is line-delimited JSON, one record per sample:

    {"t": <int microseconds>, "l": {"x": <f64>, "y": <f64>, "v": <bool>}|null, "r": ...}

``t`` counts microseconds since session start.  ``l``/``r`` are the left and
right eye; ``null`` means the tracker emitted nothing for that eye, ``v`` is
the vendor validity flag.  Vendor exports are converted into this format via
:func:`from_vendor_records`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import GazeOrderError, GazeParseError

PROVENANCE_BOTH = "both-eyes-averaged"
PROVENANCE_LEFT = "left-only"
PROVENANCE_RIGHT = "right-only"


@dataclass(frozen=True)
class EyeSample:
    x: float
    y: float
    valid: bool


@dataclass(frozen=True)
class GazeSample:
    timestamp_us: int
    left: Optional[EyeSample] = None
    right: Optional[EyeSample] = None


@dataclass(frozen=True)
class GazePoint:
    x: float
    y: float
    provenance: str


@dataclass(frozen=True)
class FrameGazeBinding:
    frame_index: int
    frame_timestamp_us: int
    gaze: Optional[GazePoint]
    source_timestamp_us: Optional[int] = None


def _parse_eye(obj, line_no: int, key: str) -> Optional[EyeSample]:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise GazeParseError(line_no, f"field {key!r} must be an object or null")
    try:
        x, y, v = obj["x"], obj["y"], obj["v"]
    except KeyError as exc:
        raise GazeParseError(line_no, f"eye {key!r} missing key {exc.args[0]!r}") from exc
    if not isinstance(x, (int, float)) or not isinstance(y, (int, float)) or not isinstance(v, bool):
        raise GazeParseError(line_no, f"eye {key!r} has wrong field types")
    return EyeSample(float(x), float(y), bool(v))


def parse_gaze_line(line: str, line_no: int) -> GazeSample:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise GazeParseError(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise GazeParseError(line_no, "record must be a JSON object")
    t = obj.get("t")
    if not isinstance(t, int) or isinstance(t, bool) or t < 0:
        raise GazeParseError(line_no, "field 't' must be a non-negative integer")
    return GazeSample(
        timestamp_us=t,
        left=_parse_eye(obj.get("l"), line_no, "l"),
        right=_parse_eye(obj.get("r"), line_no, "r"),
    )


def parse_gaze_file(path) -> list[GazeSample]:
    """Parse a gaze export.

    Returns samples in file order.  Raises :class:`GazeParseError` on a
    malformed line and :class:`GazeOrderError` when timestamps are not
    strictly increasing; corrupt exports are never silently repaired.
    """
    samples: list[GazeSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        prev_t = None
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            sample = parse_gaze_line(line, line_no)
            if prev_t is not None and sample.timestamp_us <= prev_t:
                raise GazeOrderError(
                    line_no,
                    f"timestamp {sample.timestamp_us} not greater than previous {prev_t}",
                )
            prev_t = sample.timestamp_us
            samples.append(sample)
    return samples


def _eye_json(eye: Optional[EyeSample]):
    if eye is None:
        return None
    return {"x": eye.x, "y": eye.y, "v": eye.valid}


def serialize_gaze_sample(sample: GazeSample) -> str:
    return json.dumps(
        {"t": sample.timestamp_us, "l": _eye_json(sample.left), "r": _eye_json(sample.right)},
        separators=(",", ":"),
    )


def write_gaze_file(path, samples: Iterable[GazeSample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(serialize_gaze_sample(s) + "\n")


def from_vendor_records(
    records: Iterable[Mapping],
    to_sample: Callable[[Mapping], GazeSample],
) -> list[GazeSample]:
    """Converter hook for proprietary exports: map vendor rows to samples."""
    return [to_sample(r) for r in records]


def resolve_gaze(sample: GazeSample, frame_w: float, frame_h: float) -> Optional[GazePoint]:
    """Collapse a binocular sample into one scene-image point.

    Both eyes valid: component-wise mean.  One valid eye: that eye's point.
    Neither: ``None``.  Out-of-bounds points are returned unclamped; use
    :func:`is_in_bounds` to count them (dropping them would discard signal).
    """
    left = sample.left if (sample.left is not None and sample.left.valid) else None
    right = sample.right if (sample.right is not None and sample.right.valid) else None
    if left is not None and right is not None:
        return GazePoint((left.x + right.x) / 2.0, (left.y + right.y) / 2.0, PROVENANCE_BOTH)
    if left is not None:
        return GazePoint(left.x, left.y, PROVENANCE_LEFT)
    if right is not None:
        return GazePoint(right.x, right.y, PROVENANCE_RIGHT)
    return None


def is_in_bounds(point: GazePoint, frame_w: float, frame_h: float) -> bool:
    return 0 <= point.x < frame_w and 0 <= point.y < frame_h


def count_out_of_bounds(bindings: Sequence[FrameGazeBinding], frame_w: float, frame_h: float) -> int:
    """Warning counter for resolved-but-outside-frame gaze points."""
    return sum(
        1 for b in bindings if b.gaze is not None and not is_in_bounds(b.gaze, frame_w, frame_h)
    )


def default_sync_tolerance_us(frame_timestamps: Sequence[int]) -> int:
    """Half the median inter-frame interval, floored at 1."""
    if len(frame_timestamps) < 2:
        return 20_000
    gaps = sorted(
        frame_timestamps[i + 1] - frame_timestamps[i] for i in range(len(frame_timestamps) - 1)
    )
    median = gaps[len(gaps) // 2]
    return max(1, median // 2)


def sync_to_frames(
    samples: Sequence[GazeSample],
    frame_timestamps: Sequence[int],
    tolerance_us: Optional[int] = None,
    frame_w: float = 1920.0,
    frame_h: float = 1080.0,
) -> list[FrameGazeBinding]:
    """Bind each frame to the nearest-in-time resolvable gaze sample.

    Only samples with at least one valid eye are candidates.  A frame whose
    nearest candidate lies further than ``tolerance_us`` gets ``gaze=None``.
    Equidistant candidates resolve to the earlier sample.
    """
    if tolerance_us is None:
        tolerance_us = default_sync_tolerance_us(frame_timestamps)
    if tolerance_us <= 0:
        raise ValueError("tolerance_us must be positive")
    for i in range(1, len(frame_timestamps)):
        if frame_timestamps[i] <= frame_timestamps[i - 1]:
            raise GazeOrderError(i + 1, "frame timestamps must be strictly increasing")

    resolved: list[tuple[int, GazePoint]] = []
    for s in samples:
        point = resolve_gaze(s, frame_w, frame_h)
        if point is not None:
            resolved.append((s.timestamp_us, point))

    bindings: list[FrameGazeBinding] = []
    j = 0
    for frame_index, ft in enumerate(frame_timestamps):
        # advance to the last candidate at or before ft; earlier wins on ties
        while j + 1 < len(resolved) and resolved[j + 1][0] <= ft:
            j += 1
        best = None
        if resolved:
            candidates = [resolved[j]]
            if resolved[j][0] > ft and j > 0:
                candidates.append(resolved[j - 1])
            if j + 1 < len(resolved):
                candidates.append(resolved[j + 1])
            best_dt = None
            for ts, point in candidates:
                dt = abs(ts - ft)
                if dt <= tolerance_us and (
                    best_dt is None or dt < best_dt or (dt == best_dt and ts < best[0])
                ):
                    best, best_dt = (ts, point), dt
        if best is None:
            bindings.append(FrameGazeBinding(frame_index, ft, None))
        else:
            bindings.append(FrameGazeBinding(frame_index, ft, best[1], best[0]))
    return bindings


def read_frame_timestamps(path) -> list[int]:
    """Frame-timestamp file: one integer microsecond value per line."""
    out: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                out.append(int(text))
            except ValueError as exc:
                raise GazeParseError(line_no, f"not an integer timestamp: {text!r}") from exc
    return out


def write_frame_timestamps(path, timestamps: Iterable[int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in timestamps:
            fh.write(f"{t}\n")
