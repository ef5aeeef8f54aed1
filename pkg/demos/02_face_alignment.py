#!/usr/bin/env python3
"""Five-point alignment: estimate a similarity transform and warp a face.

A synthetic "face" (two bright eyes, a nose stripe) is drawn rotated and
scaled somewhere in a large frame; its landmarks are mapped back onto the
canonical 112x112 template and the warp recovers the canonical view.
"""
import numpy as np

from classgaze.faces import (
    AlignmentTemplate,
    DEFAULT_TEMPLATE_POINTS,
    FaceObservation,
    apply_transform,
    estimate_similarity_transform,
    warp_affine,
)

rng = np.random.default_rng(3)

# place the canonical template into the frame under a known similarity
angle = 0.4
scale = 2.5
offset = np.array([700.0, 350.0])
rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
template = np.array(DEFAULT_TEMPLATE_POINTS)
landmarks_in_frame = scale * template @ rot.T + offset

matrix = estimate_similarity_transform(landmarks_in_frame, template)
recovered_scale = float(np.hypot(matrix[0, 0], matrix[1, 0]))
print(f"planted scale {1/scale:.4f} (frame->template), recovered {recovered_scale:.4f}")
residual = apply_transform(matrix, landmarks_in_frame) - template
print(f"max landmark residual: {np.abs(residual).max():.2e} px")

# draw the face in the frame and warp it back to the crop
frame = np.zeros((1080, 1920), dtype=np.uint8)
for cx, cy in landmarks_in_frame[:2]:  # eyes
    y, x = np.ogrid[:1080, :1920]
    frame[(x - cx) ** 2 + (y - cy) ** 2 < (6 * scale) ** 2] = 255
nose = landmarks_in_frame[2]
frame[int(nose[1]) - 4:int(nose[1]) + 4, int(nose[0]) - 4:int(nose[0]) + 4] = 180

crop = warp_affine(frame, matrix, 112, 112)
eye_left = crop[int(template[0][1]), int(template[0][0])]
eye_right = crop[int(template[1][1]), int(template[1][0])]
print(f"crop size: {crop.shape}; eye pixels after warp: {eye_left}, {eye_right} (expect 255)")

obs = FaceObservation(
    frame_index=0,
    box=(
        float(landmarks_in_frame[:, 0].min() - 30), float(landmarks_in_frame[:, 1].min() - 40),
        float(landmarks_in_frame[:, 0].max() + 30), float(landmarks_in_frame[:, 1].max() + 40),
    ),
    landmarks=tuple(map(tuple, landmarks_in_frame)),
    score=0.98,
)
print(f"observation center: {((obs.box[0]+obs.box[2])/2):.0f}, {((obs.box[1]+obs.box[3])/2):.0f}")
print("align_face(frame, obs, AlignmentTemplate()) produces the same crop:",
      np.array_equal(crop, warp_affine(frame, estimate_similarity_transform(
          np.array(obs.landmarks), template), 112, 112)))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].imshow(frame, cmap="gray")
    axes[0].scatter(*landmarks_in_frame.T, c="r", s=8)
    axes[0].set_title("frame with planted face")
    axes[1].imshow(crop, cmap="gray")
    axes[1].scatter(*template.T, c="r", s=8)
    axes[1].set_title("aligned 112x112 crop")
    fig.savefig("demo_alignment.png", dpi=80, bbox_inches="tight")
    print("wrote demo_alignment.png")
except ImportError:
    pass
