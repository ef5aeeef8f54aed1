"""Annotation HTTP API: crop labeling, truth coding, result review.

Plain HTTP+JSON so any frontend (or a script) can drive it.  Labels and
truth records persist atomically on every accepted submission with
last-writer-wins per (crop_id, annotator_id) / (frame_index, annotator_id);
double coding by a second annotator adds rows instead of replacing them.
"""
from __future__ import annotations

import io
import os
import threading
import time
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, PlainTextResponse, Response
from pydantic import BaseModel

from .config import SessionConfig
from .errors import ConfigError
from .faces import read_detections
from .gaze import parse_gaze_file, read_frame_timestamps, sync_to_frames
from .labels import LabelRecord, crops_from_detections, read_labels_csv, write_labels_csv
from .synth import read_roster

LABEL_TARGET_PER_STUDENT = 30
TRUTH_NONE = "none"
US_PER_MINUTE = 60_000_000


class LabelSubmission(BaseModel):
    crop_id: str
    student_id: str
    annotator_id: str


class TruthSubmission(BaseModel):
    frame_index: int
    student_id: str  # roster id or "none"
    annotator_id: str


class AnnotationStore:
    """In-memory annotation state backed by atomically rewritten CSV files."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.lock = threading.Lock()
        self.labels_path = cfg.path(cfg.labels_file)
        self.truth_path = os.path.join(
            os.path.dirname(self.labels_path) or ".", "truth_annotations.csv"
        )
        self.classroom_id, self.roster = read_roster(cfg.path(cfg.roster_file))
        self.detections = read_detections(cfg.path(cfg.detections_file))
        self.crops = crops_from_detections(self.detections)
        self.crop_by_id = {c.crop_id: c for c in self.crops}
        self.frame_timestamps = read_frame_timestamps(cfg.path(cfg.frame_timestamps))
        samples = parse_gaze_file(cfg.path(cfg.gaze_file)) if os.path.exists(cfg.path(cfg.gaze_file)) else []
        self.bindings = sync_to_frames(
            samples, self.frame_timestamps, cfg.gaze_cfg.sync_tolerance_us,
            cfg.gaze_cfg.frame_width, cfg.gaze_cfg.frame_height,
        )
        self.labels: dict[tuple[str, str], LabelRecord] = {}
        if os.path.exists(self.labels_path):
            for r in read_labels_csv(self.labels_path):
                self.labels[(r.crop_id, r.annotator_id)] = r
        self.truth: dict[tuple[int, str], tuple[str, float]] = {}
        if os.path.exists(self.truth_path):
            import csv

            with open(self.truth_path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    self.truth[(int(row["frame_index"]), row["annotator_id"])] = (
                        row["student_id"], float(row["ts"]),
                    )

    def frame_ts(self, frame_index: int) -> int:
        return self.frame_timestamps[frame_index]

    def submit_label(self, sub: LabelSubmission) -> dict:
        if sub.student_id not in self.roster:
            raise HTTPException(400, f"unknown student_id {sub.student_id!r}")
        crop = self.crop_by_id.get(sub.crop_id)
        if crop is None:
            raise HTTPException(400, f"unknown crop_id {sub.crop_id!r}")
        if not sub.annotator_id:
            raise HTTPException(400, "annotator_id required")
        record = LabelRecord(
            crop_id=sub.crop_id,
            frame_index=crop.obs.frame_index,
            box=crop.obs.box,
            student_id=sub.student_id,
            annotator_id=sub.annotator_id,
            ts=time.time(),
        )
        with self.lock:
            self.labels[(sub.crop_id, sub.annotator_id)] = record
            self._persist_labels()
        return {"ok": True, "progress": self.progress()}

    def _persist_labels(self) -> None:
        ordered = sorted(self.labels.values(), key=lambda r: (r.crop_id, r.annotator_id))
        write_labels_csv(self.labels_path, ordered)

    def progress(self) -> dict:
        per_student: dict[str, set] = {s: set() for s in self.roster}
        for record in self.labels.values():
            per_student[record.student_id].add(record.crop_id)
        counts = {s: len(v) for s, v in per_student.items()}
        return {
            "target": LABEL_TARGET_PER_STUDENT,
            "per_student": counts,
            "complete": [s for s, n in counts.items() if n >= LABEL_TARGET_PER_STUDENT],
        }

    def crop_listing(
        self,
        minute: Optional[int],
        unlabeled: bool,
        annotator: Optional[str],
        suggest: Optional[int],
        seed: int,
    ) -> list[dict]:
        out = []
        labeled_ids = {
            crop_id
            for (crop_id, annot) in self.labels
            if annotator is None or annot == annotator
        }
        for crop in self.crops:
            ts = self.frame_ts(crop.obs.frame_index)
            if minute is not None and not ((minute - 1) * US_PER_MINUTE <= ts < minute * US_PER_MINUTE):
                continue
            if unlabeled and crop.crop_id in labeled_ids:
                continue
            out.append({
                "crop_id": crop.crop_id,
                "frame_index": crop.obs.frame_index,
                "timestamp_us": ts,
                "box": list(crop.obs.box),
                "score": crop.obs.score,
            })
        if suggest is not None and suggest < len(out):
            rng = np.random.default_rng(seed)
            picks = rng.choice(len(out), size=suggest, replace=False)
            out = [out[i] for i in sorted(picks)]
        return out

    def submit_truth(self, sub: TruthSubmission) -> dict:
        if sub.student_id != TRUTH_NONE and sub.student_id not in self.roster:
            raise HTTPException(400, f"unknown student_id {sub.student_id!r}")
        if not (0 <= sub.frame_index < len(self.frame_timestamps)):
            raise HTTPException(400, f"frame_index {sub.frame_index} out of range")
        if not sub.annotator_id:
            raise HTTPException(400, "annotator_id required")
        with self.lock:
            self.truth[(sub.frame_index, sub.annotator_id)] = (sub.student_id, time.time())
            self._persist_truth()
        return {"ok": True}

    def _persist_truth(self) -> None:
        import csv
        import tempfile

        directory = os.path.dirname(os.path.abspath(self.truth_path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".truth-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["frame_index", "student_id", "annotator_id", "ts"])
                for (frame, annot), (student, ts) in sorted(self.truth.items()):
                    writer.writerow([frame, student, annot, ts])
            os.replace(tmp, self.truth_path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def truth_csv_for(self, annotator: str) -> str:
        lines = ["frame_index,student_id"]
        for (frame, annot), (student, _) in sorted(self.truth.items()):
            if annot == annotator and student != TRUTH_NONE:
                lines.append(f"{frame},{student}")
        return "\n".join(lines) + "\n"

    def truth_frames(self, minute: Optional[int]) -> list[dict]:
        by_frame: dict[int, list] = {}
        for crop in self.crops:
            by_frame.setdefault(crop.obs.frame_index, []).append(crop)
        out = []
        for binding in self.bindings:
            ts = binding.frame_timestamp_us
            if minute is not None and not ((minute - 1) * US_PER_MINUTE <= ts < minute * US_PER_MINUTE):
                continue
            gaze = None
            if binding.gaze is not None:
                gaze = {"x": binding.gaze.x, "y": binding.gaze.y}
            out.append({
                "frame_index": binding.frame_index,
                "timestamp_us": ts,
                "gaze": gaze,
                "faces": [
                    {"crop_id": c.crop_id, "box": list(c.obs.box)}
                    for c in by_frame.get(binding.frame_index, [])
                ],
            })
        return out


def _placeholder_crop_png(crop, size: int = 112) -> bytes:
    """Schematic stand-in rendered from the crop id when no imagery exists."""
    from PIL import Image, ImageDraw

    shade = 40 + (sum(crop.crop_id.encode()) % 120)
    img = Image.new("RGB", (size, size), (shade, shade, shade + 40))
    draw = ImageDraw.Draw(img)
    draw.rectangle([4, 4, size - 5, size - 5], outline=(230, 230, 230))
    draw.ellipse([size * 0.3, size * 0.2, size * 0.7, size * 0.6], outline=(250, 220, 180))
    draw.text((8, size - 18), crop.crop_id, fill=(255, 255, 255))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def make_app(cfg: SessionConfig, ui_dir: Optional[str] = None) -> FastAPI:
    store = AnnotationStore(cfg)
    app = FastAPI(title="classgaze annotation API")
    app.state.store = store

    @app.get("/api/roster")
    def roster():
        return {"classroom_id": store.classroom_id, "students": list(store.roster)}

    @app.get("/api/crops")
    def crops(
        minute: Optional[int] = Query(default=None, ge=1),
        unlabeled: bool = False,
        annotator: Optional[str] = None,
        suggest: Optional[int] = Query(default=None, ge=1),
        seed: int = 0,
    ):
        return store.crop_listing(minute, unlabeled, annotator, suggest, seed)

    @app.get("/api/crops/{crop_id}/image")
    def crop_image(crop_id: str):
        crop = store.crop_by_id.get(crop_id)
        if crop is None:
            raise HTTPException(404, f"unknown crop {crop_id!r}")
        if cfg.frames_dir:
            from PIL import Image

            path = os.path.join(cfg.path(cfg.frames_dir), f"{crop.obs.frame_index:06d}.png")
            if os.path.exists(path):
                x1, y1, x2, y2 = (int(round(v)) for v in crop.obs.box)
                img = Image.open(path).crop((x1, y1, x2, y2))
                buf = io.BytesIO()
                img.save(buf, format="PNG")
                return Response(buf.getvalue(), media_type="image/png")
        return Response(_placeholder_crop_png(crop), media_type="image/png")

    @app.post("/api/labels")
    def submit_label(sub: LabelSubmission):
        return store.submit_label(sub)

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/truth-frames")
    def truth_frames(minute: Optional[int] = Query(default=None, ge=1)):
        return store.truth_frames(minute)

    @app.post("/api/truth")
    def submit_truth(sub: TruthSubmission):
        return store.submit_truth(sub)

    @app.get("/api/truth.csv")
    def truth_csv(annotator: str):
        return PlainTextResponse(store.truth_csv_for(annotator), media_type="text/csv")

    @app.get("/api/report")
    def report():
        path = os.path.join(cfg.path(cfg.reports_dir), "report.json")
        if not os.path.exists(path):
            raise HTTPException(404, "no report generated yet")
        with open(path, "r", encoding="utf-8") as fh:
            return Response(fh.read(), media_type="application/json")

    @app.get("/api/attention")
    def attention():
        path = cfg.path("attention.jsonl")
        if not os.path.exists(path):
            raise HTTPException(404, "no attention records yet")
        with open(path, "r", encoding="utf-8") as fh:
            return PlainTextResponse(fh.read(), media_type="application/x-ndjson")

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return HTMLResponse(
                "<html><body><h1>classgaze annotation API</h1>"
                "<p>No UI bundle mounted; the JSON API is under /api/.</p></body></html>"
            )

    return app


def serve(cfg: SessionConfig, host: str = "127.0.0.1", port: int = 8008,
          ui_dir: Optional[str] = None) -> None:
    import uvicorn

    for required in (cfg.detections_file, cfg.roster_file, cfg.frame_timestamps):
        path = cfg.path(required)
        if not os.path.exists(path):
            raise ConfigError(f"annotation service needs {path}")
    uvicorn.run(make_app(cfg, ui_dir), host=host, port=port, log_level="warning")
