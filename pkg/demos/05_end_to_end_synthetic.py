#!/usr/bin/env python3
"""The whole pipeline on a synthetic classroom, through the CLI commands.

Equivalent shell session:

    classgaze synth --out sess --students 6 --frames 600 --seed 4 \
        --gaze-noise 10 --occlusion 0.05 --labels-per-student 30
    classgaze detect   --config sess/session.toml
    classgaze train    --config sess/session.toml --family knn
    classgaze map      --config sess/session.toml --family knn
    classgaze evaluate --pred sess/attention.jsonl --truth sess/truth.csv \
        --out sess/reports/report.json
    classgaze report   --report sess/reports/report.json --format markdown
"""
import json
import tempfile
from pathlib import Path

from classgaze.cli import main

sess = Path(tempfile.mkdtemp(prefix="classgaze-demo-")) / "sess"

for argv in (
    ["synth", "--out", str(sess), "--students", "6", "--frames", "600", "--seed", "4",
     "--gaze-noise", "10", "--occlusion", "0.05", "--labels-per-student", "30"],
    ["detect", "--config", str(sess / "session.toml")],
    ["train", "--config", str(sess / "session.toml"), "--family", "knn"],
    ["map", "--config", str(sess / "session.toml"), "--family", "knn"],
    ["evaluate", "--pred", str(sess / "attention.jsonl"), "--truth", str(sess / "truth.csv"),
     "--out", str(sess / "reports" / "report.json")],
):
    print(f"\n$ classgaze {' '.join(argv)}")
    assert main(argv) == 0

report = json.loads((sess / "reports" / "report.json").read_text())
print("\nconfusion matrix (rows true, cols predicted):")
print("      " + " ".join(f"{c:>5}" for c in report["confusion"]["class_set"]))
for cls, row in zip(report["confusion"]["class_set"], report["confusion"]["counts"]):
    print(f"{cls:>5} " + " ".join(f"{v:>5}" for v in row))
print(f"\naccuracy {report['accuracy']:.3f}  precision {report['precision']:.3f}  "
      f"recall {report['recall']:.3f}  f1 {report['f1']:.3f}")
print(f"session artifacts under {sess}")
