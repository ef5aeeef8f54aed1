"""Session configuration: one TOML file tying a recording's artifacts together."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .faces import BackendConfig

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib


@dataclass
class GazeConfig:
    frame_width: int = 1920
    frame_height: int = 1080
    gaze_hz: int = 50
    sync_tolerance_us: Optional[int] = None  # None = half median frame interval


@dataclass
class SessionConfig:
    classroom_id: str = "classroom"
    seed: int = 0
    root: str = "."
    frames_dir: str = ""
    frame_timestamps: str = "frames.txt"
    gaze_file: str = "gaze.jsonl"
    detections_file: str = "detections.jsonl"
    plants_file: str = ""  # synthetic detector input; defaults to detections_file
    embeddings_file: str = "embeddings.npy"
    labels_file: str = "labels.csv"
    truth_file: str = "truth.csv"
    roster_file: str = "roster.json"
    models_dir: str = "models"
    reports_dir: str = "reports"
    gaze_cfg: GazeConfig = field(default_factory=GazeConfig)
    detector: BackendConfig = field(default_factory=BackendConfig)
    embedder: BackendConfig = field(default_factory=BackendConfig)
    grid_path: str = ""
    max_distance_px: Optional[float] = None

    def path(self, name: str) -> str:
        return os.path.join(self.root, name)


def _backend_from_table(table: dict) -> BackendConfig:
    cfg = BackendConfig()
    for key in ("backend_kind", "model_path", "score_threshold", "nms_iou",
                "input_size", "crop_size", "normalize"):
        if key in table:
            setattr(cfg, key, table[key])
    if cfg.backend_kind not in ("synthetic", "neural"):
        raise ConfigError(f"backend_kind must be 'synthetic' or 'neural', got {cfg.backend_kind!r}")
    return cfg


def load_session_config(path) -> SessionConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    cfg = SessionConfig(root=os.path.dirname(os.path.abspath(path)))
    cfg.classroom_id = data.get("classroom_id", cfg.classroom_id)
    cfg.seed = data.get("seed", cfg.seed)
    paths = data.get("paths", {})
    for key, attr in (
        ("frames", "frames_dir"),
        ("frame_timestamps", "frame_timestamps"),
        ("gaze", "gaze_file"),
        ("detections", "detections_file"),
        ("plants", "plants_file"),
        ("embeddings", "embeddings_file"),
        ("labels", "labels_file"),
        ("truth", "truth_file"),
        ("roster", "roster_file"),
        ("models", "models_dir"),
        ("reports", "reports_dir"),
    ):
        if key in paths:
            setattr(cfg, attr, paths[key])
    gaze_table = data.get("gaze_cfg", {})
    for key in ("frame_width", "frame_height", "gaze_hz", "sync_tolerance_us"):
        if key in gaze_table:
            setattr(cfg.gaze_cfg, key, gaze_table[key])
    if "detector" in data:
        cfg.detector = _backend_from_table(data["detector"])
    if "embedder" in data:
        cfg.embedder = _backend_from_table(data["embedder"])
    cfg.grid_path = data.get("grid_path", "")
    if "max_distance_px" in data:
        cfg.max_distance_px = float(data["max_distance_px"])
    return cfg


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_session_config(path, cfg: SessionConfig) -> None:
    """Emit the flat TOML schema understood by load_session_config."""
    lines = [
        f"classroom_id = {_toml_value(cfg.classroom_id)}",
        f"seed = {cfg.seed}",
    ]
    if cfg.max_distance_px is not None:
        lines.append(f"max_distance_px = {_toml_value(cfg.max_distance_px)}")
    if cfg.grid_path:
        lines.append(f"grid_path = {_toml_value(cfg.grid_path)}")
    lines += ["", "[paths]"]
    for key, value in (
        ("frames", cfg.frames_dir),
        ("frame_timestamps", cfg.frame_timestamps),
        ("gaze", cfg.gaze_file),
        ("detections", cfg.detections_file),
        ("plants", cfg.plants_file),
        ("embeddings", cfg.embeddings_file),
        ("labels", cfg.labels_file),
        ("truth", cfg.truth_file),
        ("roster", cfg.roster_file),
        ("models", cfg.models_dir),
        ("reports", cfg.reports_dir),
    ):
        if value:
            lines.append(f"{key} = {_toml_value(value)}")
    lines += ["", "[gaze_cfg]"]
    lines.append(f"frame_width = {cfg.gaze_cfg.frame_width}")
    lines.append(f"frame_height = {cfg.gaze_cfg.frame_height}")
    lines.append(f"gaze_hz = {cfg.gaze_cfg.gaze_hz}")
    if cfg.gaze_cfg.sync_tolerance_us is not None:
        lines.append(f"sync_tolerance_us = {cfg.gaze_cfg.sync_tolerance_us}")
    for name, backend in (("detector", cfg.detector), ("embedder", cfg.embedder)):
        lines += ["", f"[{name}]"]
        lines.append(f"backend_kind = {_toml_value(backend.backend_kind)}")
        if backend.model_path:
            lines.append(f"model_path = {_toml_value(backend.model_path)}")
        lines.append(f"score_threshold = {_toml_value(backend.score_threshold)}")
        lines.append(f"nms_iou = {_toml_value(backend.nms_iou)}")
        lines.append(f"input_size = {backend.input_size}")
        lines.append(f"crop_size = {backend.crop_size}")
        lines.append(f"normalize = {_toml_value(backend.normalize)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
