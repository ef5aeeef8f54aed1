"""classgaze: map a teacher's mobile eye-tracker gaze onto individual students.

The pipeline runs offline over a recorded (or synthetic) session: parse and
frame-sync the gaze stream, detect and embed faces through pluggable
backends, train classical classifiers on a handful of labeled crops per
student, assign each frame's gaze to the nearest detected face, and score
the attended-student verdicts against human ground truth.
"""
__version__ = "0.1.0"

from . import classifiers, config, faces, gaze, labels, mapping, metrics, selection, synth
from .errors import ClassgazeError

__all__ = [
    "ClassgazeError",
    "__version__",
    "classifiers",
    "config",
    "faces",
    "gaze",
    "labels",
    "mapping",
    "metrics",
    "selection",
    "synth",
]
