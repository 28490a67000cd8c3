"""Quaternion math, skeletal forward kinematics, and finite-difference velocities.

Quaternions are scalar-first ``[w, x, y, z]`` float64 arrays. All quaternion
functions broadcast over leading axes, so a single call handles one rotation,
a pose worth of joints ``(J, 4)``, or a whole track ``(T, J, 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])

# Renormalization below this drift is skipped so that already-unit values
# survive a save/load cycle bit-for-bit.
UNIT_NORM_ATOL = 1e-12


def quat_normalize(q: Array) -> Array:
    """Scale to unit norm along the last axis; zero-norm input maps to identity."""
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    safe = np.where(norm == 0.0, 1.0, norm)
    out = q / safe
    return np.where(norm == 0.0, IDENTITY_QUAT, out)


def quat_mul(q1: Array, q2: Array) -> Array:
    """Hamilton product q1 ⊗ q2, broadcasting over leading axes."""
    w1, x1, y1, z1 = np.moveaxis(np.asarray(q1, dtype=np.float64), -1, 0)
    w2, x2, y2, z2 = np.moveaxis(np.asarray(q2, dtype=np.float64), -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def quat_conjugate(q: Array) -> Array:
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_rotate(q: Array, v: Array) -> Array:
    """Rotate vectors v (..., 3) by unit quaternions q (..., 4)."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    qv = q[..., 1:]
    w = q[..., :1]
    t = 2.0 * np.cross(qv, v)
    return v + w * t + np.cross(qv, t)


def quat_from_axis_angle(rotvec: Array) -> Array:
    """Exponential map: rotation vectors (..., 3) to unit quaternions (..., 4)."""
    rotvec = np.asarray(rotvec, dtype=np.float64)
    angle = np.linalg.norm(rotvec, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(a/2)/a -> 1/2 as a -> 0; series keeps the map smooth at zero
    small = angle < 1e-8
    scale = np.where(small, 0.5 - angle * angle / 48.0, np.sin(half) / np.where(small, 1.0, angle))
    return np.concatenate([np.cos(half), rotvec * scale], axis=-1)


def quat_to_axis_angle(q: Array) -> Array:
    """Log map: unit quaternions (..., 4) to rotation vectors (..., 3)."""
    q = np.asarray(q, dtype=np.float64)
    # canonical sign gives the shortest rotation
    q = np.where(q[..., :1] < 0.0, -q, q)
    sin_half = np.linalg.norm(q[..., 1:], axis=-1, keepdims=True)
    angle = 2.0 * np.arctan2(sin_half, q[..., :1])
    small = sin_half < 1e-12
    scale = np.where(small, 2.0, angle / np.where(small, 1.0, sin_half))
    return q[..., 1:] * scale


def quat_angular_distance(q1: Array, q2: Array) -> Array:
    """Angle 2*arccos(|<q1, q2>|) in [0, pi], insensitive to quaternion sign.

    Evaluated through the half-chord identity 4*arcsin(min(|q1-q2|, |q1+q2|)/2),
    which is exact for unit inputs and stays accurate where arccos loses
    precision: identical (or antipodal) inputs give exactly 0. The implied
    dot-product clamp to [0, 1] is inherited from clamping the chord.
    """
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    chord = np.minimum(
        np.linalg.norm(q1 - q2, axis=-1), np.linalg.norm(q1 + q2, axis=-1)
    )
    return 4.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))


def slerp(q1: Array, q2: Array, t: float | Array) -> Array:
    """Spherical linear interpolation along the shorter arc.

    Near-antipodal inputs (no unique shortest arc) and near-identical inputs
    fall back to normalized linear interpolation.
    """
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)[..., None]
    dot = np.sum(q1 * q2, axis=-1, keepdims=True)
    q2 = np.where(dot < 0.0, -q2, q2)
    dot = np.abs(dot)

    linear = quat_normalize(q1 + t * (q2 - q1))

    dotc = np.clip(dot, -1.0, 1.0)
    theta = np.arccos(dotc)
    sin_theta = np.sin(theta)
    degenerate = sin_theta < 1e-6
    sin_safe = np.where(degenerate, 1.0, sin_theta)
    w1 = np.sin((1.0 - t) * theta) / sin_safe
    w2 = np.sin(t * theta) / sin_safe
    curved = quat_normalize(w1 * q1 + w2 * q2)
    return np.where(degenerate, linear, curved)


def ensure_unit(rotations: Array) -> tuple[Array, float]:
    """Return (unit-normalized rotations, max observed norm drift).

    Values already within ``UNIT_NORM_ATOL`` of unit norm are passed through
    untouched so canonical serialization stays byte-stable.
    """
    rotations = np.asarray(rotations, dtype=np.float64)
    norm = np.linalg.norm(rotations, axis=-1)
    drift = float(np.max(np.abs(norm - 1.0))) if rotations.size else 0.0
    if drift <= UNIT_NORM_ATOL:
        return rotations, drift
    return quat_normalize(rotations), drift


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Joint hierarchy with rest offsets and an upper-body subset.

    Joints are stored in topological order: the single root is joint 0 with
    parent -1, and ``parents[j] < j`` for every other joint. ``rest_offsets[j]``
    is the bone vector from the parent to joint j in the parent frame, meters.
    """

    parents: Array
    rest_offsets: Array
    upper_body: Array
    joint_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        parents = np.ascontiguousarray(self.parents, dtype=np.int64)
        offsets = np.ascontiguousarray(self.rest_offsets, dtype=np.float64)
        upper = np.unique(np.asarray(self.upper_body, dtype=np.int64))
        if parents.ndim != 1 or parents.size == 0:
            raise ValueError("parents must be a non-empty 1-D index array")
        j = parents.size
        if offsets.shape != (j, 3):
            raise ValueError(f"rest_offsets must have shape ({j}, 3), got {offsets.shape}")
        if not np.all(np.isfinite(offsets)):
            raise ValueError("rest_offsets must be finite")
        roots = np.flatnonzero(parents == -1)
        if roots.size != 1 or roots[0] != 0:
            raise ValueError("exactly one root joint with parent -1 is required at index 0")
        rest = parents[1:]
        if np.any(rest < 0) or np.any(rest >= np.arange(1, j)):
            raise ValueError("parents[j] must satisfy 0 <= parents[j] < j for non-root joints")
        if upper.size == 0:
            raise ValueError("upper_body must be non-empty")
        if upper[0] < 0 or upper[-1] >= j:
            raise ValueError("upper_body indices out of range")
        if self.joint_names is not None and len(self.joint_names) != j:
            raise ValueError("joint_names length must match joint count")
        for arr in (parents, offsets, upper):
            arr.setflags(write=False)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "rest_offsets", offsets)
        object.__setattr__(self, "upper_body", upper)

    @property
    def joint_count(self) -> int:
        return int(self.parents.size)


@dataclass(frozen=True, eq=False)
class Pose:
    """Per-joint local rotations (J, 4) plus root translation (3,), meters."""

    rotations: Array
    root_translation: Array

    def __post_init__(self) -> None:
        raw = np.asarray(self.rotations, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[1] != 4:
            raise ValueError(f"rotations must have shape (J, 4), got {raw.shape}")
        rotations, _ = ensure_unit(raw)
        translation = np.ascontiguousarray(self.root_translation, dtype=np.float64)
        if translation.shape != (3,):
            raise ValueError(f"root_translation must have shape (3,), got {translation.shape}")
        if not np.all(np.isfinite(rotations)) or not np.all(np.isfinite(translation)):
            raise ValueError("pose values must be finite")
        rotations = np.ascontiguousarray(rotations)
        rotations.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotations", rotations)
        object.__setattr__(self, "root_translation", translation)

    @property
    def joint_count(self) -> int:
        return int(self.rotations.shape[0])


def forward_kinematics(skeleton: Skeleton, rotations: Array, root_translation: Array) -> Array:
    """World joint positions (..., J, 3) from local rotations and root translation.

    The root sits at ``root_translation``; every child sits at its parent's
    position plus the parent's accumulated world rotation applied to the
    child's rest offset. Works on single poses ``(J, 4)`` or stacked tracks
    ``(T, J, 4)``.
    """
    rotations = np.asarray(rotations, dtype=np.float64)
    root_translation = np.asarray(root_translation, dtype=np.float64)
    j = skeleton.joint_count
    if rotations.shape[-2:] != (j, 4):
        raise ValueError(
            f"rotations shape {rotations.shape} does not match skeleton with {j} joints"
        )
    if root_translation.shape[-1:] != (3,) or root_translation.shape[:-1] != rotations.shape[:-2]:
        raise ValueError(
            f"root_translation shape {root_translation.shape} does not match rotations {rotations.shape}"
        )
    batch = rotations.shape[:-2]
    world_rot = np.empty(batch + (j, 4))
    positions = np.empty(batch + (j, 3))
    world_rot[..., 0, :] = rotations[..., 0, :]
    positions[..., 0, :] = root_translation
    parents = skeleton.parents
    offsets = skeleton.rest_offsets
    for joint in range(1, j):
        parent = parents[joint]
        world_rot[..., joint, :] = quat_mul(world_rot[..., parent, :], rotations[..., joint, :])
        positions[..., joint, :] = positions[..., parent, :] + quat_rotate(
            world_rot[..., parent, :], offsets[joint]
        )
    return positions


def central_difference_velocities(positions: Array, fps: float) -> Array:
    """Per-frame velocities (T, ..., 3) from a position track sampled at fps.

    Interior frames use central differences; the first and last frame fall
    back to one-sided differences so the output keeps the track length.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim < 2 or positions.shape[0] < 2:
        raise ValueError("position track must have at least 2 frames")
    if fps <= 0:
        raise ValueError("fps must be positive")
    velocities = np.empty_like(positions)
    velocities[1:-1] = (positions[2:] - positions[:-2]) * (fps / 2.0)
    velocities[0] = (positions[1] - positions[0]) * fps
    velocities[-1] = (positions[-1] - positions[-2]) * fps
    return velocities
