#!/usr/bin/env python3
"""Walk through the gaze ingest stage on a tiny handmade stream.

Shows the binocular resolution rules (average both eyes, fall back to a
single valid eye, give up when neither is valid) and nearest-in-time
frame synchronization with a tolerance.
"""
import tempfile

from classgaze.gaze import (
    EyeSample,
    GazeSample,
    parse_gaze_file,
    resolve_gaze,
    sync_to_frames,
    write_gaze_file,
)

# a 50 Hz stream: samples every 20 ms, with one blink (both eyes invalid)
samples = [
    GazeSample(0, EyeSample(400.0, 300.0, True), EyeSample(420.0, 310.0, True)),
    GazeSample(20_000, EyeSample(410.0, 305.0, True), EyeSample(9.0, 9.0, False)),
    GazeSample(40_000, EyeSample(0.0, 0.0, False), EyeSample(0.0, 0.0, False)),
    GazeSample(60_000, EyeSample(430.0, 300.0, True), EyeSample(450.0, 310.0, True)),
]

print("resolution per sample:")
for s in samples:
    point = resolve_gaze(s, 1920, 1080)
    if point is None:
        print(f"  t={s.timestamp_us:>6} us -> no valid gaze (blink)")
    else:
        print(f"  t={s.timestamp_us:>6} us -> ({point.x:.1f}, {point.y:.1f})  [{point.provenance}]")

# the file format round-trips exactly
with tempfile.NamedTemporaryFile(suffix=".jsonl", delete=False) as fh:
    path = fh.name
write_gaze_file(path, samples)
assert parse_gaze_file(path) == samples
print(f"\nround-tripped {len(samples)} samples through {path}")

# 25 fps scene camera: a frame every 40 ms; tolerance defaults to half that
frames = [0, 40_000, 80_000]
bindings = sync_to_frames(samples, frames)
print("\nframe bindings (nearest valid sample within tolerance):")
for b in bindings:
    if b.gaze is None:
        print(f"  frame {b.frame_index} @ {b.frame_timestamp_us} us -> no gaze")
    else:
        print(f"  frame {b.frame_index} @ {b.frame_timestamp_us} us -> "
              f"({b.gaze.x:.1f}, {b.gaze.y:.1f}) from sample t={b.source_timestamp_us}")
