"""Convert SMPL-X parameter archives into motion/feature documents.

The output formats are the motion-synthesis package's on-disk contracts (see
its docs/formats.md); this tool produces them directly and never imports that
package.

Archive layout (NumPy ``.npz``): a single clip uses flat keys, multiple clips
prefix every key with ``<clip_id>/``.

    poses   (T, 3J) or (T, J, 3)   axis-angle joint rotations  [required]
    trans   (T, 3)                 root translation, meters    [required]
    betas   (10,)                  shape parameters            [optional]
    focal   scalar                 camera focal length         [optional]
    fps     scalar                 source frame rate           [optional, 30]
    mel     (T_a, d)               mel features                [optional]
    hubert  (T_a, d)               speech-embedding features   [optional]
    llm_tokens (M, d) + token_times (M,)  token features       [optional]
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

Array = np.ndarray

FORMAT_VERSION = 1
TARGET_FPS = 30.0

MOTION_KEYS = ("poses", "trans")
OPTIONAL_KEYS = ("betas", "focal", "fps")
FEATURE_KEYS = ("mel", "hubert", "llm_tokens", "token_times")


class ConversionError(Exception):
    """Archive is missing required arrays or holds inconsistent shapes."""


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def axis_angle_to_quat(rotvec: Array) -> Array:
    """Rotation vectors (..., 3) to scalar-first unit quaternions (..., 4)."""
    rotvec = np.asarray(rotvec, dtype=np.float64)
    angle = np.linalg.norm(rotvec, axis=-1, keepdims=True)
    half = 0.5 * angle
    small = angle < 1e-8
    scale = np.where(small, 0.5 - angle * angle / 48.0, np.sin(half) / np.where(small, 1.0, angle))
    return np.concatenate([np.cos(half), rotvec * scale], axis=-1)


@dataclass
class ClipReport:
    clip_id: str
    frames_in: int
    frames_out: int
    dropped_nan: int
    resampled_from: float | None


@dataclass
class ConversionResult:
    motion: dict[str, Any]
    features: dict[str, Any] | None
    reports: list[ClipReport] = field(default_factory=list)


def load_skeleton_definition(path: str | Path) -> dict[str, Any]:
    """Read a skeleton document and return its skeleton object."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("kind") != "skeleton" or raw.get("format_version") != FORMAT_VERSION:
        raise ConversionError(f"{path}: expected a format_version-1 skeleton document")
    skeleton = raw.get("skeleton")
    for key in ("parents", "rest_offsets", "upper_body"):
        if not isinstance(skeleton, dict) or key not in skeleton:
            raise ConversionError(f"{path}: skeleton is missing '{key}'")
    return skeleton


def _group_archive(archive) -> dict[str, dict[str, Array]]:
    """Group npz keys by clip prefix; unprefixed keys form a single 'clip0'."""
    grouped: dict[str, dict[str, Array]] = {}
    for key in archive.files:
        if "/" in key:
            clip_id, _, name = key.partition("/")
        else:
            clip_id, name = "clip0", key
        grouped.setdefault(clip_id, {})[name] = archive[key]
    return grouped


def _resample_indices(frames: int, source_fps: float, target_fps: float) -> Array:
    """Nearest-frame resampling: target frame k reads source round(k*src/target)."""
    duration = frames / source_fps
    out_frames = max(1, int(round(duration * target_fps)))
    idx = np.round(np.arange(out_frames) * (source_fps / target_fps)).astype(np.int64)
    return np.clip(idx, 0, frames - 1)


def _convert_clip(
    clip_id: str,
    arrays: dict[str, Array],
    joint_count: int,
    target_fps: float,
) -> tuple[dict[str, Any], ClipReport]:
    missing = [k for k in MOTION_KEYS if k not in arrays]
    if missing:
        raise ConversionError(f"clip '{clip_id}': missing required arrays {missing}")
    poses = np.asarray(arrays["poses"], dtype=np.float64)
    trans = np.asarray(arrays["trans"], dtype=np.float64)
    if poses.ndim == 2:
        if poses.shape[1] != 3 * joint_count:
            raise ConversionError(
                f"clip '{clip_id}': poses width {poses.shape[1]} != 3*{joint_count} joints"
            )
        poses = poses.reshape(poses.shape[0], joint_count, 3)
    if poses.ndim != 3 or poses.shape[1:] != (joint_count, 3):
        raise ConversionError(f"clip '{clip_id}': poses shape {poses.shape} not (T, {joint_count}, 3)")
    if trans.shape != (poses.shape[0], 3):
        raise ConversionError(
            f"clip '{clip_id}': trans shape {trans.shape} does not match {poses.shape[0]} frames"
        )

    frames_in = poses.shape[0]
    finite = np.isfinite(poses).all(axis=(1, 2)) & np.isfinite(trans).all(axis=1)
    dropped = int(frames_in - finite.sum())
    poses, trans = poses[finite], trans[finite]
    if poses.shape[0] == 0:
        raise ConversionError(f"clip '{clip_id}': no finite frames left after dropping NaNs")

    source_fps = float(arrays["fps"]) if "fps" in arrays else target_fps
    resampled_from = None
    if not math.isclose(source_fps, target_fps):
        idx = _resample_indices(poses.shape[0], source_fps, target_fps)
        poses, trans = poses[idx], trans[idx]
        resampled_from = source_fps

    quats = axis_angle_to_quat(poses)
    metadata: dict[str, Any] = {}
    if "betas" in arrays:
        metadata["shape_params"] = np.asarray(arrays["betas"], dtype=np.float64).ravel().tolist()
    if "focal" in arrays:
        metadata["focal_length"] = float(np.asarray(arrays["focal"]).ravel()[0])
    clip = {
        "clip_id": clip_id,
        "rotations": quats.tolist(),
        "root_translations": trans.tolist(),
        "metadata": metadata,
    }
    report = ClipReport(
        clip_id=clip_id,
        frames_in=frames_in,
        frames_out=quats.shape[0],
        dropped_nan=dropped,
        resampled_from=resampled_from,
    )
    return clip, report


def _collect_features(grouped: dict[str, dict[str, Array]], target_fps: float) -> dict[str, Any] | None:
    streams = {}
    for arrays in grouped.values():
        for name in FEATURE_KEYS:
            if name in arrays and name not in streams:
                streams[name] = np.asarray(arrays[name], dtype=np.float64)
    if not any(name in streams for name in ("mel", "hubert", "llm_tokens")):
        return None
    frame_count = None
    for name in ("mel", "hubert"):
        if name in streams:
            frame_count = int(streams[name].shape[0])
            break
    if frame_count is None:
        frame_count = int(streams["llm_tokens"].shape[0])
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "kind": "features",
        "fps": target_fps,
        "frame_count": frame_count,
        "mel": None,
        "hubert": None,
        "llm_tokens": None,
        "token_times": None,
    }
    for name in FEATURE_KEYS:
        if name in streams:
            doc[name] = streams[name].tolist()
    return doc


def convert_archive(
    archive_path: str | Path,
    skeleton: dict[str, Any],
    target_fps: float = TARGET_FPS,
) -> ConversionResult:
    """Build a motion document (and a feature document when present) from an archive."""
    joint_count = len(skeleton["parents"])
    with np.load(Path(archive_path)) as archive:
        grouped = _group_archive(archive)
        clips = []
        reports = []
        for clip_id in sorted(grouped):
            motion_arrays = {
                k: v for k, v in grouped[clip_id].items() if k in MOTION_KEYS + OPTIONAL_KEYS
            }
            if not motion_arrays:
                continue
            clip, report = _convert_clip(clip_id, motion_arrays, joint_count, target_fps)
            clips.append(clip)
            reports.append(report)
        features = _collect_features(grouped, target_fps)
    if not clips:
        raise ConversionError(f"{archive_path}: no clip carries 'poses'/'trans' arrays")
    motion = {
        "format_version": FORMAT_VERSION,
        "kind": "motion",
        "fps": target_fps,
        "skeleton": skeleton,
        "clips": clips,
    }
    return ConversionResult(motion=motion, features=features, reports=reports)


def reexport_motion(path: str | Path) -> dict[str, Any]:
    """Validate and canonically re-emit an already-converted motion document."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("kind") != "motion" or raw.get("format_version") != FORMAT_VERSION:
        raise ConversionError(f"{path}: not a format_version-1 motion document")
    joint_count = len(raw["skeleton"]["parents"])
    for clip in raw.get("clips", []):
        rotations = clip.get("rotations")
        translations = clip.get("root_translations")
        if not rotations or len(rotations[0]) != joint_count:
            raise ConversionError(f"{path}: clip '{clip.get('clip_id')}' joint count mismatch")
        if len(rotations) != len(translations):
            raise ConversionError(f"{path}: clip '{clip.get('clip_id')}' frame count mismatch")
    return raw


def detect_input_kind(path: str | Path) -> str:
    """'archive' for npz inputs (npz files are zip containers), else 'motion'."""
    import zipfile

    return "archive" if zipfile.is_zipfile(path) else "motion"
