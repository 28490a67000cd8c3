"""Versioned on-disk documents: motion, features, skeletons, graphs, paths, plans.

All JSON documents are serialized canonically (sorted keys, compact
separators, shortest-roundtrip floats, trailing newline), so saving a loaded
document reproduces the file byte for byte. Motion graphs may alternatively
be stored in a length-prefixed binary container selected by the ``.bin``
extension; see ``docs/formats.md`` for every field.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DocumentError
from .kinematics import Pose, Skeleton, ensure_unit

Array = np.ndarray

FORMAT_VERSION = 1
GRAPH_BINARY_MAGIC = b"GGB1"

# Above this norm drift a loaded quaternion is considered degraded and a
# warning is emitted (values are renormalized either way).
NORM_DRIFT_WARN = 1e-6


@dataclass(frozen=True, eq=False)
class MotionSequence:
    """A fixed-fps track of poses: rotations (T, J, 4) and root translations (T, 3)."""

    rotations: Array
    root_translations: Array
    fps: float

    def __post_init__(self) -> None:
        raw = np.asarray(self.rotations, dtype=np.float64)
        if raw.ndim != 3 or raw.shape[2] != 4:
            raise DocumentError(f"rotations must have shape (T, J, 4), got {raw.shape}")
        rotations = np.ascontiguousarray(ensure_unit(raw)[0])
        translations = np.ascontiguousarray(self.root_translations, dtype=np.float64)
        if translations.shape != (rotations.shape[0], 3):
            raise DocumentError(
                f"root_translations shape {translations.shape} does not match {rotations.shape[0]} frames"
            )
        if self.fps <= 0:
            raise DocumentError("fps must be positive")
        if not np.all(np.isfinite(rotations)) or not np.all(np.isfinite(translations)):
            raise DocumentError("motion values must be finite")
        rotations.setflags(write=False)
        translations.setflags(write=False)
        object.__setattr__(self, "rotations", rotations)
        object.__setattr__(self, "root_translations", translations)
        object.__setattr__(self, "fps", float(self.fps))

    @property
    def frame_count(self) -> int:
        return int(self.rotations.shape[0])

    @property
    def joint_count(self) -> int:
        return int(self.rotations.shape[1])

    @property
    def duration(self) -> float:
        """Track length in seconds."""
        return self.frame_count / self.fps

    def pose(self, frame: int) -> Pose:
        return Pose(self.rotations[frame], self.root_translations[frame])


@dataclass(frozen=True, eq=False)
class Clip:
    """One named motion clip plus free-form JSON-safe metadata."""

    clip_id: str
    motion: MotionSequence
    metadata: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class MotionDocument:
    """A skeleton plus one or more clips sampled at a common fps."""

    skeleton: Skeleton
    clips: tuple[Clip, ...]
    fps: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "clips", tuple(self.clips))
        object.__setattr__(self, "fps", float(self.fps))
        if self.fps <= 0:
            raise DocumentError("fps must be positive")
        seen: set[str] = set()
        for clip in self.clips:
            if clip.clip_id in seen:
                raise DocumentError(f"duplicate clip_id '{clip.clip_id}'")
            seen.add(clip.clip_id)
            if clip.motion.joint_count != self.skeleton.joint_count:
                raise DocumentError(
                    f"clip '{clip.clip_id}' has {clip.motion.joint_count} joints, "
                    f"skeleton has {self.skeleton.joint_count}"
                )
            if clip.motion.fps != self.fps:
                raise DocumentError(f"clip '{clip.clip_id}' fps differs from document fps")


@dataclass(frozen=True, eq=False)
class FeatureDocument:
    """Per-frame conditioning features; any stream may be absent.

    ``mel`` and ``hubert`` are (T, d) frame-aligned matrices. ``llm_tokens``
    is (M, d) token-aligned, optionally with per-token ``token_times`` in
    seconds (non-decreasing).
    """

    fps: float
    frame_count: int
    mel: Array | None = None
    hubert: Array | None = None
    llm_tokens: Array | None = None
    token_times: Array | None = None

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise DocumentError("fps must be positive")
        if self.frame_count < 1:
            raise DocumentError("frame_count must be at least 1")
        for name in ("mel", "hubert", "llm_tokens", "token_times"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.ascontiguousarray(value, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise DocumentError(f"feature stream '{name}' contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("mel", "hubert"):
            arr = getattr(self, name)
            if arr is not None and (arr.ndim != 2 or arr.shape[0] != self.frame_count):
                raise DocumentError(
                    f"feature stream '{name}' must have {self.frame_count} rows, got shape {arr.shape}"
                )
        if self.llm_tokens is not None and self.llm_tokens.ndim != 2:
            raise DocumentError("llm_tokens must be a 2-D (tokens, dim) matrix")
        if self.token_times is not None:
            if self.llm_tokens is None:
                raise DocumentError("token_times given without llm_tokens")
            if self.token_times.shape != (self.llm_tokens.shape[0],):
                raise DocumentError("token_times length must match llm_tokens rows")
            if np.any(np.diff(self.token_times) < 0):
                raise DocumentError("token_times must be non-decreasing")

    @property
    def token_count(self) -> int:
        return 0 if self.llm_tokens is None else int(self.llm_tokens.shape[0])


# ---------------------------------------------------------------------------
# canonical JSON plumbing


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def write_canonical(obj: Any, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(obj), encoding="utf-8")


def read_json(path: str | Path, expected_kind: str) -> dict[str, Any]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, ValueError) as exc:
        raise DocumentError(f"{path}: not a valid document: {exc}") from exc
    if not isinstance(raw, dict):
        raise DocumentError(f"{path}: document root must be an object")
    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        raise DocumentError(
            f"{path}: unsupported format_version {version!r}, expected {FORMAT_VERSION}"
        )
    kind = raw.get("kind")
    if kind != expected_kind:
        raise DocumentError(f"{path}: expected a '{expected_kind}' document, found {kind!r}")
    return raw


def _matrix(raw: Any, context: str, width: int | None = None) -> Array:
    """Parse a nested list into a 2-D float matrix, naming the bad row on failure."""
    if not isinstance(raw, list):
        raise DocumentError(f"{context}: expected a list of rows")
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        arr = None
    if arr is None or arr.ndim != 2 or (width is not None and arr.shape[1] != width):
        for i, row in enumerate(raw):
            if not isinstance(row, list) or (width is not None and len(row) != width):
                raise DocumentError(
                    f"{context}: row {i} must be a list"
                    + (f" of {width} numbers" if width else " of numbers")
                )
        raise DocumentError(f"{context}: ragged or non-numeric matrix")
    return arr


def _rotation_track(raw: Any, context: str, joint_count: int) -> Array:
    """Parse (T, J, 4) quaternions, reporting the offending frame/joint on failure."""
    if not isinstance(raw, list):
        raise DocumentError(f"{context}: expected a list of frames")
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        arr = None
    if arr is None or arr.ndim != 3 or arr.shape[1:] != (joint_count, 4):
        for t, frame in enumerate(raw):
            if not isinstance(frame, list) or len(frame) != joint_count:
                raise DocumentError(f"{context}: frame {t} must list {joint_count} joint rotations")
            for j, quat in enumerate(frame):
                if not isinstance(quat, list) or len(quat) != 4:
                    raise DocumentError(
                        f"{context}: frame {t} joint {j}: quaternion must have 4 components [w, x, y, z]"
                    )
        raise DocumentError(f"{context}: malformed rotation track")
    return arr


def _checked_rotations(arr: Array, context: str) -> Array:
    normalized, drift = ensure_unit(arr)
    if drift > NORM_DRIFT_WARN:
        warnings.warn(
            f"{context}: quaternion norm drift {drift:.3e} exceeds {NORM_DRIFT_WARN:.0e}; renormalized",
            stacklevel=3,
        )
    return normalized


# ---------------------------------------------------------------------------
# skeletons


def skeleton_to_dict(skeleton: Skeleton) -> dict[str, Any]:
    return {
        "parents": skeleton.parents.tolist(),
        "rest_offsets": skeleton.rest_offsets.tolist(),
        "upper_body": skeleton.upper_body.tolist(),
        "joint_names": list(skeleton.joint_names) if skeleton.joint_names else None,
    }


def skeleton_from_dict(raw: Any, context: str = "skeleton") -> Skeleton:
    if not isinstance(raw, dict):
        raise DocumentError(f"{context}: expected an object")
    for key in ("parents", "rest_offsets", "upper_body"):
        if key not in raw:
            raise DocumentError(f"{context}: missing '{key}'")
    names = raw.get("joint_names")
    try:
        return Skeleton(
            parents=np.asarray(raw["parents"], dtype=np.int64),
            rest_offsets=_matrix(raw["rest_offsets"], f"{context}.rest_offsets", width=3),
            upper_body=np.asarray(raw["upper_body"], dtype=np.int64),
            joint_names=tuple(names) if names else None,
        )
    except ValueError as exc:
        raise DocumentError(f"{context}: {exc}") from exc


def save_skeleton(skeleton: Skeleton, path: str | Path) -> None:
    write_canonical(
        {"format_version": FORMAT_VERSION, "kind": "skeleton", "skeleton": skeleton_to_dict(skeleton)},
        path,
    )


def load_skeleton(path: str | Path) -> Skeleton:
    raw = read_json(path, "skeleton")
    return skeleton_from_dict(raw.get("skeleton"), context=f"{path}: skeleton")


# ---------------------------------------------------------------------------
# motion documents


def save_motion(doc: MotionDocument, path: str | Path) -> None:
    clips = []
    for clip in doc.clips:
        clips.append(
            {
                "clip_id": clip.clip_id,
                "rotations": clip.motion.rotations.tolist(),
                "root_translations": clip.motion.root_translations.tolist(),
                "metadata": clip.metadata,
            }
        )
    write_canonical(
        {
            "format_version": FORMAT_VERSION,
            "kind": "motion",
            "fps": doc.fps,
            "skeleton": skeleton_to_dict(doc.skeleton),
            "clips": clips,
        },
        path,
    )


def load_motion(path: str | Path) -> MotionDocument:
    raw = read_json(path, "motion")
    skeleton = skeleton_from_dict(raw.get("skeleton"), context=f"{path}: skeleton")
    fps = raw.get("fps")
    if not isinstance(fps, (int, float)) or fps <= 0:
        raise DocumentError(f"{path}: fps must be a positive number")
    clips_raw = raw.get("clips")
    if not isinstance(clips_raw, list):
        raise DocumentError(f"{path}: 'clips' must be a list")
    clips = []
    for i, clip_raw in enumerate(clips_raw):
        if not isinstance(clip_raw, dict) or "clip_id" not in clip_raw:
            raise DocumentError(f"{path}: clip {i} must be an object with a clip_id")
        clip_id = clip_raw["clip_id"]
        context = f"{path}: clip '{clip_id}'"
        rotations = _rotation_track(clip_raw.get("rotations"), context, skeleton.joint_count)
        rotations = _checked_rotations(rotations, context)
        translations = _matrix(clip_raw.get("root_translations"), f"{context}.root_translations", width=3)
        if translations.shape[0] != rotations.shape[0]:
            raise DocumentError(f"{context}: root_translations frame count mismatch")
        metadata = clip_raw.get("metadata") or {}
        if not isinstance(metadata, dict):
            raise DocumentError(f"{context}: metadata must be an object")
        try:
            motion = MotionSequence(rotations, translations, fps=float(fps))
        except DocumentError as exc:
            raise DocumentError(f"{context}: {exc}") from exc
        clips.append(Clip(clip_id=str(clip_id), motion=motion, metadata=metadata))
    return MotionDocument(skeleton=skeleton, clips=tuple(clips), fps=float(fps))


# ---------------------------------------------------------------------------
# feature documents


def save_features(doc: FeatureDocument, path: str | Path) -> None:
    def opt(arr: Array | None) -> Any:
        return None if arr is None else arr.tolist()

    write_canonical(
        {
            "format_version": FORMAT_VERSION,
            "kind": "features",
            "fps": doc.fps,
            "frame_count": doc.frame_count,
            "mel": opt(doc.mel),
            "hubert": opt(doc.hubert),
            "llm_tokens": opt(doc.llm_tokens),
            "token_times": opt(doc.token_times),
        },
        path,
    )


def load_features(path: str | Path) -> FeatureDocument:
    raw = read_json(path, "features")
    fps = raw.get("fps")
    frame_count = raw.get("frame_count")
    if not isinstance(fps, (int, float)) or fps <= 0:
        raise DocumentError(f"{path}: fps must be a positive number")
    if not isinstance(frame_count, int) or frame_count < 1:
        raise DocumentError(f"{path}: frame_count must be a positive integer")

    def mat(name: str) -> Array | None:
        value = raw.get(name)
        return None if value is None else _matrix(value, f"{path}: {name}")

    token_times = raw.get("token_times")
    try:
        return FeatureDocument(
            fps=float(fps),
            frame_count=frame_count,
            mel=mat("mel"),
            hubert=mat("hubert"),
            llm_tokens=mat("llm_tokens"),
            token_times=None if token_times is None else np.asarray(token_times, dtype=np.float64),
        )
    except DocumentError as exc:
        raise DocumentError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# graph documents (JSON or binary container, selected by extension)


def save_graph(graph: Any, path: str | Path) -> None:
    """Write a MotionGraph as JSON (default) or binary when the path ends in .bin."""
    path = Path(path)
    if path.suffix == ".bin":
        _save_graph_binary(graph, path)
    else:
        _save_graph_json(graph, path)


def load_graph(path: str | Path) -> Any:
    path = Path(path)
    if path.suffix == ".bin":
        return _load_graph_binary(path)
    return _load_graph_json(path)


def _graph_module():
    from . import graph as graph_module

    return graph_module


def _save_graph_json(graph: Any, path: Path) -> None:
    nodes = []
    has_focal = graph.focal_lengths is not None
    for i in range(graph.node_count):
        node = {
            "clip_id": graph.clip_ids[i],
            "frame_index": int(graph.frame_indices[i]),
            "rotations": graph.rotations[i].tolist(),
            "root_translation": graph.root_translations[i].tolist(),
            "positions": graph.positions[i].tolist(),
            "velocities": graph.velocities[i].tolist(),
            "focal_length": float(graph.focal_lengths[i]) if has_focal else None,
        }
        nodes.append(node)
    edges = [
        {"src": int(s), "dst": int(d), "kind": "continuous"} for s, d in graph.continuous_edges
    ] + [{"src": int(s), "dst": int(d), "kind": "transition"} for s, d in graph.transition_edges]
    write_canonical(
        {
            "format_version": FORMAT_VERSION,
            "kind": "graph",
            "fps": graph.fps,
            "skeleton": skeleton_to_dict(graph.skeleton),
            "nodes": nodes,
            "edges": edges,
            "meta": graph.meta,
        },
        path,
    )


def _load_graph_json(path: Path) -> Any:
    raw = read_json(path, "graph")
    skeleton = skeleton_from_dict(raw.get("skeleton"), context=f"{path}: skeleton")
    fps = raw.get("fps")
    if not isinstance(fps, (int, float)) or fps <= 0:
        raise DocumentError(f"{path}: fps must be a positive number")
    nodes_raw = raw.get("nodes")
    edges_raw = raw.get("edges")
    if not isinstance(nodes_raw, list) or not isinstance(edges_raw, list):
        raise DocumentError(f"{path}: 'nodes' and 'edges' must be lists")
    j = skeleton.joint_count
    n = len(nodes_raw)
    clip_ids = []
    frame_indices = np.empty(n, dtype=np.int64)
    rotations = np.empty((n, j, 4))
    root_translations = np.empty((n, 3))
    positions = np.empty((n, j, 3))
    velocities = np.empty((n, j, 3))
    focal = np.full(n, np.nan)
    any_focal = False
    for i, node in enumerate(nodes_raw):
        context = f"{path}: node {i}"
        if not isinstance(node, dict):
            raise DocumentError(f"{context}: must be an object")
        try:
            clip_ids.append(str(node["clip_id"]))
            frame_indices[i] = int(node["frame_index"])
            rotations[i] = _rotation_track([node["rotations"]], context, j)[0]
            root_translations[i] = np.asarray(node["root_translation"], dtype=np.float64)
            positions[i] = _matrix(node["positions"], f"{context}.positions", width=3)
            velocities[i] = _matrix(node["velocities"], f"{context}.velocities", width=3)
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"{context}: {exc}") from exc
        if node.get("focal_length") is not None:
            focal[i] = float(node["focal_length"])
            any_focal = True
    rotations = _checked_rotations(rotations, f"{path}: nodes") if n else rotations
    continuous = []
    transition = []
    for i, edge in enumerate(edges_raw):
        if not isinstance(edge, dict) or edge.get("kind") not in ("continuous", "transition"):
            raise DocumentError(f"{path}: edge {i}: kind must be 'continuous' or 'transition'")
        try:
            pair = (int(edge["src"]), int(edge["dst"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"{path}: edge {i}: {exc}") from exc
        (continuous if edge["kind"] == "continuous" else transition).append(pair)
    meta = raw.get("meta") or {}
    graph_module = _graph_module()
    try:
        return graph_module.MotionGraph(
            skeleton=skeleton,
            fps=float(fps),
            clip_ids=tuple(clip_ids),
            frame_indices=frame_indices,
            rotations=rotations,
            root_translations=root_translations,
            positions=positions,
            velocities=velocities,
            focal_lengths=focal if any_focal else None,
            continuous_edges=np.asarray(continuous, dtype=np.int64).reshape(-1, 2),
            transition_edges=np.asarray(transition, dtype=np.int64).reshape(-1, 2),
            meta=meta,
        )
    except Exception as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _write_block(handle, arr: Array) -> None:
    data = np.ascontiguousarray(arr).tobytes()
    handle.write(struct.pack("<Q", len(data)))
    handle.write(data)


def _read_block(handle, dtype, shape) -> Array:
    (length,) = struct.unpack("<Q", handle.read(8))
    data = handle.read(length)
    if len(data) != length:
        raise DocumentError("binary graph truncated")
    arr = np.frombuffer(data, dtype=dtype).reshape(shape)
    return arr.copy()


def _save_graph_binary(graph: Any, path: Path) -> None:
    clip_table = sorted(set(graph.clip_ids))
    clip_index = {cid: i for i, cid in enumerate(clip_table)}
    header = dumps_canonical(
        {
            "format_version": FORMAT_VERSION,
            "kind": "graph",
            "fps": graph.fps,
            "skeleton": skeleton_to_dict(graph.skeleton),
            "clip_table": clip_table,
            "node_count": graph.node_count,
            "continuous_count": int(graph.continuous_edges.shape[0]),
            "transition_count": int(graph.transition_edges.shape[0]),
            "has_focal": graph.focal_lengths is not None,
            "meta": graph.meta,
        }
    ).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(GRAPH_BINARY_MAGIC)
        handle.write(struct.pack("<Q", len(header)))
        handle.write(header)
        _write_block(handle, np.asarray([clip_index[c] for c in graph.clip_ids], dtype=np.int64))
        _write_block(handle, graph.frame_indices.astype(np.int64))
        _write_block(handle, graph.rotations)
        _write_block(handle, graph.root_translations)
        _write_block(handle, graph.positions)
        _write_block(handle, graph.velocities)
        if graph.focal_lengths is not None:
            _write_block(handle, graph.focal_lengths)
        _write_block(handle, graph.continuous_edges.astype(np.int64))
        _write_block(handle, graph.transition_edges.astype(np.int64))


def _load_graph_binary(path: Path) -> Any:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != GRAPH_BINARY_MAGIC:
            raise DocumentError(f"{path}: not a binary graph container")
        (header_len,) = struct.unpack("<Q", handle.read(8))
        header = json.loads(handle.read(header_len).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise DocumentError(f"{path}: unsupported format_version {header.get('format_version')!r}")
        skeleton = skeleton_from_dict(header.get("skeleton"), context=f"{path}: skeleton")
        j = skeleton.joint_count
        n = int(header["node_count"])
        clip_table = header["clip_table"]
        clip_idx = _read_block(handle, np.int64, (n,))
        frame_indices = _read_block(handle, np.int64, (n,))
        rotations = _read_block(handle, np.float64, (n, j, 4))
        root_translations = _read_block(handle, np.float64, (n, 3))
        positions = _read_block(handle, np.float64, (n, j, 3))
        velocities = _read_block(handle, np.float64, (n, j, 3))
        focal = None
        if header.get("has_focal"):
            focal = _read_block(handle, np.float64, (n,))
        continuous = _read_block(handle, np.int64, (int(header["continuous_count"]), 2))
        transition = _read_block(handle, np.int64, (int(header["transition_count"]), 2))
    try:
        clip_ids = tuple(clip_table[i] for i in clip_idx)
    except IndexError as exc:
        raise DocumentError(f"{path}: clip table index out of range") from exc
    rotations = _checked_rotations(rotations, f"{path}: nodes") if n else rotations
    graph_module = _graph_module()
    try:
        return graph_module.MotionGraph(
            skeleton=skeleton,
            fps=float(header["fps"]),
            clip_ids=clip_ids,
            frame_indices=frame_indices,
            rotations=rotations,
            root_translations=root_translations,
            positions=positions,
            velocities=velocities,
            focal_lengths=focal,
            continuous_edges=continuous,
            transition_edges=transition,
            meta=header.get("meta") or {},
        )
    except Exception as exc:
        raise DocumentError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# retrieved paths


def save_path(retrieved: Any, graph: Any, path: str | Path) -> None:
    """Write a RetrievedPath with per-step provenance resolved against its graph."""
    steps = []
    for t, node in enumerate(retrieved.nodes):
        steps.append(
            {
                "node": int(node),
                "clip_id": graph.clip_ids[int(node)],
                "frame_index": int(graph.frame_indices[int(node)]),
                "edge_kind": "start" if t == 0 else retrieved.edge_kinds[t - 1],
                "step_cost": float(retrieved.step_costs[t]),
            }
        )
    write_canonical(
        {
            "format_version": FORMAT_VERSION,
            "kind": "path",
            "total_cost": float(retrieved.total_cost),
            "steps": steps,
        },
        path,
    )


def load_path(path: str | Path) -> Any:
    from .retrieval import RetrievedPath

    raw = read_json(path, "path")
    steps = raw.get("steps")
    if not isinstance(steps, list) or not steps:
        raise DocumentError(f"{path}: 'steps' must be a non-empty list")
    nodes = []
    kinds = []
    costs = []
    for i, step in enumerate(steps):
        if not isinstance(step, dict):
            raise DocumentError(f"{path}: step {i} must be an object")
        try:
            nodes.append(int(step["node"]))
            costs.append(float(step["step_cost"]))
            kind = step["edge_kind"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"{path}: step {i}: {exc}") from exc
        if i == 0:
            if kind != "start":
                raise DocumentError(f"{path}: step 0 must have edge_kind 'start'")
        elif kind not in ("continuous", "transition"):
            raise DocumentError(f"{path}: step {i}: bad edge_kind {kind!r}")
        else:
            kinds.append(kind)
    return RetrievedPath(
        nodes=np.asarray(nodes, dtype=np.int64),
        edge_kinds=tuple(kinds),
        step_costs=np.asarray(costs, dtype=np.float64),
        total_cost=float(raw.get("total_cost", sum(costs))),
    )


# ---------------------------------------------------------------------------
# render plans


def save_plan(plan: Any, path: str | Path) -> None:
    entries = []
    for entry in plan.entries:
        record: dict[str, Any] = {"kind": entry.kind, "audio_time": entry.audio_time}
        if entry.kind == "original":
            record["clip_id"] = entry.clip_id
            record["frame_index"] = entry.frame_index
        else:
            record["blend_prev"] = [list(ref) for ref in entry.blend_prev]
            record["blend_next"] = [list(ref) for ref in entry.blend_next]
        entries.append(record)
    write_canonical(
        {"format_version": FORMAT_VERSION, "kind": "render_plan", "fps": plan.fps, "entries": entries},
        path,
    )


def load_plan(path: str | Path) -> Any:
    from .stitch import PlanEntry, RenderPlan

    raw = read_json(path, "render_plan")
    fps = raw.get("fps")
    if not isinstance(fps, (int, float)) or fps <= 0:
        raise DocumentError(f"{path}: fps must be a positive number")
    entries = []
    for i, record in enumerate(raw.get("entries") or []):
        kind = record.get("kind")
        if kind == "original":
            entries.append(
                PlanEntry(
                    kind="original",
                    audio_time=float(record["audio_time"]),
                    clip_id=str(record["clip_id"]),
                    frame_index=int(record["frame_index"]),
                )
            )
        elif kind == "interpolated":
            entries.append(
                PlanEntry(
                    kind="interpolated",
                    audio_time=float(record["audio_time"]),
                    blend_prev=tuple((str(c), int(f)) for c, f in record["blend_prev"]),
                    blend_next=tuple((str(c), int(f)) for c, f in record["blend_next"]),
                )
            )
        else:
            raise DocumentError(f"{path}: entry {i}: bad kind {kind!r}")
    return RenderPlan(fps=float(fps), entries=tuple(entries))
