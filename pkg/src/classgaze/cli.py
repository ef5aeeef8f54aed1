"""Command-line pipeline: synth, detect, annotate-serve, train, map, evaluate, report.

Every command reads/writes plain files under the session directory, so
stages can be rerun, diffed, and scripted independently; fixed seeds and
inputs reproduce outputs byte for byte.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .classifiers import load_model, save_model
from .config import GazeConfig, SessionConfig, load_session_config, write_session_config
from .errors import ClassgazeError, ConfigError
from .faces import detect_faces, group_by_frame, read_detections, write_detections
from .gaze import (
    count_out_of_bounds,
    parse_gaze_file,
    read_frame_timestamps,
    sync_to_frames,
)
from .labels import read_labels_csv, write_labels_csv
from .mapping import map_session, read_attention_predictions, write_attention_records
from .metrics import (
    cohen_kappa,
    evaluate_predictions,
    load_report,
    read_truth_csv,
    render_report,
    render_report_markdown,
)
from .pipeline import (
    backend_id,
    build_detector,
    dataset_from_labels,
    embedding_provider,
    iter_frames,
)
from .selection import grid_search, refit_best, write_cv_report
from .synth import (
    SynthClassroomSpec,
    generate_session,
    load_synth_spec_toml,
    read_roster,
    scripted_labels,
    write_session_dir,
)


def _fail(message: str, code: int = 2) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _require(path: str, what: str) -> None:
    if not os.path.exists(path):
        raise ConfigError(f"{what} not found: {path}")


def cmd_synth(args) -> int:
    if args.spec:
        spec = load_synth_spec_toml(args.spec)
    else:
        spec = SynthClassroomSpec(
            n_students=args.students, layout=args.layout, n_frames=args.frames,
            seed=args.seed, occlusion_rate=args.occlusion, gaze_noise_px=args.gaze_noise,
        )
    session = generate_session(spec)
    write_session_dir(session, args.out, classroom_id=args.classroom)
    cfg = SessionConfig(
        classroom_id=args.classroom,
        seed=spec.seed,
        root=args.out,
        plants_file="plants.jsonl",
        gaze_cfg=GazeConfig(frame_width=spec.frame_width, frame_height=spec.frame_height),
    )
    write_session_config(os.path.join(args.out, "session.toml"), cfg)
    if args.labels_per_student:
        labels = scripted_labels(session, per_student=args.labels_per_student)
        write_labels_csv(os.path.join(args.out, "labels.csv"), labels)
    print(f"synthetic session written to {args.out} "
          f"({spec.n_students} students, {spec.n_frames} frames)")
    return 0


def cmd_detect(args) -> int:
    cfg = load_session_config(args.config)
    timestamps_path = cfg.path(cfg.frame_timestamps)
    _require(timestamps_path, "frame timestamps file")
    if cfg.frames_dir:
        frames_dir = cfg.path(cfg.frames_dir)
        if not os.path.isdir(frames_dir):
            raise ConfigError(f"frames directory not found: {frames_dir}")
    n_frames = len(read_frame_timestamps(timestamps_path))
    plants = cfg.path(cfg.plants_file) if cfg.plants_file else ""
    detector = build_detector(cfg.detector, plants)
    observations = []
    for idx, frame in iter_frames(cfg, n_frames):
        observations.extend(detect_faces(detector, frame, idx))
    out = cfg.path(cfg.detections_file)
    write_detections(out, observations)
    print(f"{len(observations)} detections over {n_frames} frames -> {out}")
    return 0


def cmd_annotate_serve(args) -> int:
    from .server import serve

    cfg = load_session_config(args.config)
    try:
        serve(cfg, host=args.host, port=args.port, ui_dir=args.ui)
    except OSError as exc:
        return _fail(f"cannot bind {args.host}:{args.port}: {exc}")
    return 0


def cmd_train(args) -> int:
    cfg = load_session_config(args.config)
    labels_path = cfg.path(cfg.labels_file)
    detections_path = cfg.path(cfg.detections_file)
    _require(labels_path, "labels file")
    _require(detections_path, "detections file")
    _require(cfg.path(cfg.roster_file), "roster file")
    _, roster = read_roster(cfg.path(cfg.roster_file))
    labels = read_labels_csv(labels_path)
    if not labels:
        return _fail("labels file is empty; annotate some crops first")
    detections = read_detections(detections_path)
    provider = embedding_provider(cfg, detections)
    dataset = dataset_from_labels(labels, detections, provider, roster)
    if len(dataset.class_set) < 2:
        return _fail(
            f"need labels for at least 2 students, got {len(dataset.class_set)}; label more crops"
        )

    if args.grid == "default":
        from .classifiers import default_grids

        grids = default_grids()
    else:
        from .classifiers import load_grids_toml

        grids = load_grids_toml(args.grid)
    family = args.family.lower()
    if family not in grids:
        return _fail(f"no grid for family {family!r}")
    seed = args.seed if args.seed is not None else cfg.seed
    best, results = grid_search(family, grids[family], dataset, k=args.folds, seed=seed)
    model = refit_best(best, dataset)

    os.makedirs(cfg.path(cfg.models_dir), exist_ok=True)
    os.makedirs(cfg.path(cfg.reports_dir), exist_ok=True)
    model_path = os.path.join(cfg.path(cfg.models_dir), f"{family}.json")
    save_model(model_path, model, embedding_backend=backend_id(cfg.embedder))
    cv_path = os.path.join(cfg.path(cfg.reports_dir), f"cv_{family}.json")
    write_cv_report(cv_path, results)
    best_mean = max(r.mean_accuracy for r in results if not r.failed)
    print(f"{family}: searched {len(results)} specs, best mean accuracy {best_mean:.4f}")
    print(f"model -> {model_path}")
    print(f"cv report -> {cv_path}")
    return 0


def cmd_map(args) -> int:
    cfg = load_session_config(args.config)
    model_path = args.model or os.path.join(cfg.path(cfg.models_dir), f"{args.family}.json")
    gaze_path = args.gaze or cfg.path(cfg.gaze_file)
    detections_path = args.detections or cfg.path(cfg.detections_file)
    for path, what in ((model_path, "model artifact"), (gaze_path, "gaze file"),
                       (detections_path, "detections file")):
        _require(path, what)
    model = load_model(model_path)
    samples = parse_gaze_file(gaze_path)
    timestamps = read_frame_timestamps(cfg.path(cfg.frame_timestamps))
    bindings = sync_to_frames(
        samples, timestamps, cfg.gaze_cfg.sync_tolerance_us,
        cfg.gaze_cfg.frame_width, cfg.gaze_cfg.frame_height,
    )
    oob = count_out_of_bounds(bindings, cfg.gaze_cfg.frame_width, cfg.gaze_cfg.frame_height)
    if oob:
        print(f"warning: {oob} resolved gaze points fall outside the frame", file=sys.stderr)
    detections = read_detections(detections_path)
    provider = embedding_provider(cfg, detections)
    max_distance = args.max_distance if args.max_distance is not None else cfg.max_distance_px
    records, summary = map_session(
        bindings, group_by_frame(detections), model, provider, max_distance,
    )
    out = args.out or cfg.path("attention.jsonl")
    write_attention_records(out, records)
    meta = {
        "classroom_id": cfg.classroom_id,
        "classifier": model.spec.family,
        "embeddings": backend_id(cfg.embedder),
        "n_train": model.n_train,
        "summary": summary.to_json(),
    }
    with open(out + ".summary.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, separators=(",", ":"))
        fh.write("\n")
    print(f"mapped {summary.status_counts['mapped']}/{summary.frames} frames -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    _require(args.pred, "attention records file")
    _require(args.truth, "ground truth file")
    predictions = read_attention_predictions(args.pred)
    truth = read_truth_csv(args.truth)

    meta_path = args.meta or (args.pred + ".summary.json")
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    report = evaluate_predictions(
        truth,
        predictions,
        classroom_id=meta.get("classroom_id", args.classroom or ""),
        classifier_family=meta.get("classifier", ""),
        embedding_backend=meta.get("embeddings", ""),
        n_train=meta.get("n_train", 0),
    )
    if args.truth2:
        _require(args.truth2, "second annotation file")
        truth2 = dict(read_truth_csv(args.truth2))
        truth1 = dict(truth)
        overlap = sorted(set(truth1) & set(truth2))
        if overlap:
            import dataclasses

            kappa = cohen_kappa([truth1[f] for f in overlap], [truth2[f] for f in overlap])
            report = dataclasses.replace(report, kappa=kappa)
            print(f"inter-annotator kappa over {len(overlap)} double-coded frames: {kappa:.4f}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(render_report(report, "json"))
    print(render_report_markdown(report), end="")
    return 0


def cmd_report(args) -> int:
    _require(args.report, "report file")
    report = load_report(args.report)
    text = render_report(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="classgaze",
        description="Teacher attention mapping from mobile eye-tracking sessions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic classroom session")
    p.add_argument("--spec", help="synthetic session spec TOML")
    p.add_argument("--out", required=True, help="output session directory")
    p.add_argument("--classroom", default="synthetic")
    p.add_argument("--students", type=int, default=8)
    p.add_argument("--layout", default="rows", choices=["rows", "u-shape", "small"])
    p.add_argument("--frames", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--occlusion", type=float, default=0.0)
    p.add_argument("--gaze-noise", type=float, default=0.0)
    p.add_argument("--labels-per-student", type=int, default=0,
                   help="also write scripted labels (N crops per student)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="run face detection over the session frames")
    p.add_argument("--config", required=True, help="session TOML")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("annotate-serve", help="serve the annotation HTTP API")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--ui", default="", help="static UI bundle directory to mount at /")
    p.set_defaults(func=cmd_annotate_serve)

    p = sub.add_parser("train", help="grid-search and train a classifier family")
    p.add_argument("--config", required=True)
    p.add_argument("--family", required=True,
                   help="rf | svm | knn | gb | dt")
    p.add_argument("--grid", default="default", help="'default' or a grid TOML path")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("map", help="assign gaze to nearest faces and classify")
    p.add_argument("--config", required=True)
    p.add_argument("--model", help="model artifact (default: models/<family>.json)")
    p.add_argument("--family", default="knn")
    p.add_argument("--gaze", help="override gaze file")
    p.add_argument("--detections", help="override detections file")
    p.add_argument("--max-distance", type=float, default=None,
                   help="skip frames whose nearest face is farther (px)")
    p.add_argument("--out", help="attention records output (jsonl)")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("evaluate", help="score attention records against ground truth")
    p.add_argument("--pred", required=True, help="attention records (jsonl)")
    p.add_argument("--truth", required=True, help="ground truth CSV")
    p.add_argument("--truth2", help="second annotator's CSV; adds Cohen's kappa")
    p.add_argument("--out", required=True, help="report JSON output")
    p.add_argument("--meta", help="metadata sidecar (default: <pred>.summary.json)")
    p.add_argument("--classroom", help="classroom id override")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render a report as json, csv, or markdown")
    p.add_argument("--report", required=True)
    p.add_argument("--format", default="markdown", choices=["json", "csv", "markdown"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClassgazeError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
