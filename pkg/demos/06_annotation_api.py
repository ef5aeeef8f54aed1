#!/usr/bin/env python3
"""Drive the annotation HTTP API the way the browser UI does.

Starts `annotate-serve` on a synthetic session, labels a few crops for two
annotators (double coding), posts ground-truth records, and reads back the
progress the server computes.
"""
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import requests

sess = Path(tempfile.mkdtemp(prefix="classgaze-demo-")) / "sess"
run = lambda *args: subprocess.run(
    [sys.executable, "-m", "classgaze.cli", *args], check=True, capture_output=True,
)
run("synth", "--out", str(sess), "--students", "3", "--frames", "200", "--seed", "9")
run("detect", "--config", str(sess / "session.toml"))

port = 18791
server = subprocess.Popen(
    [sys.executable, "-m", "classgaze.cli", "annotate-serve",
     "--config", str(sess / "session.toml"), "--port", str(port)],
    stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
)
base = f"http://127.0.0.1:{port}"
try:
    for _ in range(60):
        try:
            requests.get(base + "/api/roster", timeout=1)
            break
        except requests.ConnectionError:
            time.sleep(0.25)

    roster = requests.get(base + "/api/roster").json()
    print("roster:", roster)

    crops = requests.get(base + "/api/crops", params={"minute": 1}).json()
    print(f"{len(crops)} crops in minute one; first: {crops[0]['crop_id']}")

    # two annotators label the same first crop (double coding), then alice
    # labels a few more
    for annotator, student in (("alice", "S01"), ("bob", "S01")):
        requests.post(base + "/api/labels", json={
            "crop_id": crops[0]["crop_id"], "student_id": student, "annotator_id": annotator,
        }).raise_for_status()
    for crop in crops[1:6]:
        requests.post(base + "/api/labels", json={
            "crop_id": crop["crop_id"], "student_id": "S02", "annotator_id": "alice",
        }).raise_for_status()

    rejected = requests.post(base + "/api/labels", json={
        "crop_id": crops[0]["crop_id"], "student_id": "S99", "annotator_id": "alice",
    })
    print("unknown student rejected with:", rejected.status_code, rejected.json()["detail"])

    print("progress:", requests.get(base + "/api/progress").json())

    frames = requests.get(base + "/api/truth-frames", params={"minute": 1}).json()
    for frame in frames[:3]:
        student = "S01" if frame["gaze"] is not None else "none"
        requests.post(base + "/api/truth", json={
            "frame_index": frame["frame_index"], "student_id": student, "annotator_id": "alice",
        }).raise_for_status()
    print("truth csv for alice:")
    print(requests.get(base + "/api/truth.csv", params={"annotator": "alice"}).text.strip())

    print("\nlabels persisted at", sess / "labels.csv")
    print((sess / "labels.csv").read_text().strip().split("\n")[0])
finally:
    server.terminate()
