"""Motion-level evaluation: kinematic beats, beat consistency, and diversity.

Beat consistency scores how well audio beat onsets line up with kinematic
beats, the local minima of mean upper-body joint speed. Diversity is the mean
pairwise distance between sign-canonicalized upper-body rotation tracks.
Kernel width and prominence defaults are conventions of this implementation;
scores are comparable only across runs of this tool.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .errors import DocumentError
from .kinematics import Skeleton, central_difference_velocities, forward_kinematics
from .motion_io import MotionSequence

Array = np.ndarray

DEFAULT_SIGMA = 0.1  # seconds
DEFAULT_PROMINENCE = 0.05  # m/s


@dataclass(frozen=True, eq=False)
class BeatTrack:
    """Audio beat onset times in seconds, strictly increasing and non-negative."""

    times: Array

    def __post_init__(self) -> None:
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        if times.ndim != 1:
            raise DocumentError("beat times must be a 1-D array")
        if times.size and times[0] < 0:
            raise DocumentError("beat times must be non-negative")
        if np.any(np.diff(times) <= 0):
            raise DocumentError("beat times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)


def load_beats(path: str | Path) -> BeatTrack:
    """Parse a beat file: one onset time in seconds per line, '#' comments allowed."""
    times = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            times.append(float(text))
        except ValueError as exc:
            raise DocumentError(f"{path}: line {lineno}: not a number: {text!r}") from exc
    return BeatTrack(np.asarray(times, dtype=np.float64))


def mean_upper_body_speed(motion: MotionSequence, skeleton: Skeleton) -> Array:
    """Per-frame mean speed (m/s) over upper-body joints, length T."""
    positions = forward_kinematics(skeleton, motion.rotations, motion.root_translations)
    velocities = central_difference_velocities(positions, motion.fps)
    speeds = np.linalg.norm(velocities[:, skeleton.upper_body], axis=2)
    return speeds.mean(axis=1)


def kinematic_beats(
    motion: MotionSequence, skeleton: Skeleton, prominence: float = DEFAULT_PROMINENCE
) -> Array:
    """Times (seconds) of local minima of mean upper-body speed.

    Minima need at least ``prominence`` m/s of depth, so constant or static
    motion yields no beats.
    """
    if motion.frame_count < 3:
        raise DocumentError("kinematic beats need at least 3 frames")
    speed = mean_upper_body_speed(motion, skeleton)
    minima, _ = find_peaks(-speed, prominence=prominence)
    return minima / motion.fps


def beat_consistency(
    motion: MotionSequence,
    skeleton: Skeleton,
    beats: BeatTrack,
    sigma: float = DEFAULT_SIGMA,
    prominence: float = DEFAULT_PROMINENCE,
) -> float:
    """Mean over audio beats of exp(-nearest kinematic beat offset^2 / 2 sigma^2).

    1.0 means every audio beat coincides with a kinematic beat; a motion with
    no kinematic beats scores 0.
    """
    if beats.times.size == 0:
        raise DocumentError("audio beat track is empty")
    if sigma <= 0:
        raise DocumentError("sigma must be positive")
    motion_beats = kinematic_beats(motion, skeleton, prominence=prominence)
    if motion_beats.size == 0:
        return 0.0
    offsets = beats.times[:, None] - motion_beats[None, :]
    nearest_sq = (offsets**2).min(axis=1)
    return float(np.exp(-nearest_sq / (2.0 * sigma * sigma)).mean())


def diversity(motions: list[MotionSequence], skeleton: Skeleton) -> float:
    """Mean pairwise L2 distance between flattened upper-body rotation tracks.

    Quaternions are sign-canonicalized (w >= 0) first so q and -q compare
    equal. Requires at least two motions of identical length and skeleton.
    """
    if len(motions) < 2:
        raise DocumentError("diversity requires at least two motions")
    frame_count = motions[0].frame_count
    features = []
    for i, motion in enumerate(motions):
        if motion.frame_count != frame_count:
            raise DocumentError(
                f"motion {i} has {motion.frame_count} frames, expected {frame_count}"
            )
        if motion.joint_count != skeleton.joint_count:
            raise DocumentError(f"motion {i} does not match the skeleton")
        rotations = motion.rotations[:, skeleton.upper_body]
        canonical = np.where(rotations[..., :1] < 0.0, -rotations, rotations)
        features.append(canonical.reshape(-1))
    stacked = np.stack(features)
    total = 0.0
    pairs = 0
    for a in range(len(motions)):
        for b in range(a + 1, len(motions)):
            total += float(np.linalg.norm(stacked[a] - stacked[b]))
            pairs += 1
    return total / pairs
