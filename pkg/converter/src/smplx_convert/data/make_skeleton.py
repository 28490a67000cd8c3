"""Regenerate smplx_body22.json (run from this directory)."""

import json

names = [
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
]
parents = [-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19]
offsets = [
    [0.0, 0.0, 0.0],
    [0.07, -0.09, 0.0],
    [-0.07, -0.09, 0.0],
    [0.0, 0.11, 0.0],
    [0.03, -0.38, 0.0],
    [-0.03, -0.38, 0.0],
    [0.0, 0.14, 0.0],
    [-0.01, -0.4, -0.03],
    [0.01, -0.4, -0.03],
    [0.0, 0.06, 0.0],
    [0.02, -0.06, 0.12],
    [-0.02, -0.06, 0.12],
    [0.0, 0.22, -0.01],
    [0.08, 0.12, -0.02],
    [-0.08, 0.12, -0.02],
    [0.0, 0.07, 0.03],
    [0.09, 0.04, -0.01],
    [-0.09, 0.04, -0.01],
    [0.26, 0.0, 0.0],
    [-0.26, 0.0, 0.0],
    [0.25, 0.0, 0.0],
    [-0.25, 0.0, 0.0],
]
upper_body = [3, 6, 9, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21]

doc = {
    "format_version": 1,
    "kind": "skeleton",
    "skeleton": {
        "parents": parents,
        "rest_offsets": offsets,
        "upper_body": upper_body,
        "joint_names": names,
    },
}
with open("smplx_body22.json", "w", encoding="utf-8") as handle:
    handle.write(json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n")
