"""Turn a retrieved path into a continuous motion track and a render plan.

Transition edges are the only discontinuities in a retrieved path. At each
one, two interpolated frames bridge the gap: the render plan marks them (with
the bracketing source frames an external frame-interpolation/lip-sync pass
would consume), and the motion track fills them with slerped poses. With
``preserve_length`` the two frames adjacent to the transition are replaced so
the output keeps one frame per audio frame; otherwise the two frames are
inserted and the output grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GraphError
from .graph import MotionGraph
from .kinematics import slerp
from .motion_io import MotionSequence
from .retrieval import RetrievedPath

Array = np.ndarray

# geodesic fractions for the two bridging frames of a transition
_BLEND_FRACTIONS = (1.0 / 3.0, 2.0 / 3.0)


@dataclass(frozen=True)
class PlanEntry:
    kind: str  # "original" | "interpolated"
    audio_time: float
    clip_id: str | None = None
    frame_index: int | None = None
    blend_prev: tuple[tuple[str, int], ...] | None = None
    blend_next: tuple[tuple[str, int], ...] | None = None


@dataclass(frozen=True, eq=False)
class RenderPlan:
    fps: float
    entries: tuple[PlanEntry, ...]

    @property
    def duration(self) -> float:
        return len(self.entries) / self.fps


def _check_path(path: RetrievedPath, graph: MotionGraph) -> None:
    if path.nodes.size and (path.nodes.min() < 0 or path.nodes.max() >= graph.node_count):
        raise GraphError("path references nodes outside the graph")
    kinds = {(int(s), int(d)): "continuous" for s, d in graph.continuous_edges}
    kinds.update({(int(s), int(d)): "transition" for s, d in graph.transition_edges})
    for t in range(1, path.length):
        key = (int(path.nodes[t - 1]), int(path.nodes[t]))
        expected = kinds.get(key)
        if expected is None:
            raise GraphError(f"path step {t}: edge {key} does not exist in the graph")
        if expected != path.edge_kinds[t - 1]:
            raise GraphError(
                f"path step {t}: edge {key} is {expected}, path claims {path.edge_kinds[t - 1]}"
            )


def _bracket(graph: MotionGraph, node: int, before: bool) -> tuple[tuple[str, int], tuple[str, int]]:
    clip = graph.clip_ids[node]
    frame = int(graph.frame_indices[node])
    if before:
        return ((clip, max(frame - 1, 0)), (clip, frame))
    return ((clip, frame), (clip, frame + 1))


def path_to_render_plan(
    path: RetrievedPath, graph: MotionGraph, preserve_length: bool = False
) -> RenderPlan:
    """Frame schedule for the path: source frames plus interpolation markers.

    Every transition edge contributes exactly two interpolated entries citing
    the two frames before the cut and the two after it. With
    ``preserve_length`` they replace the frames adjacent to the cut instead
    of being inserted, keeping one entry per query frame (back-to-back
    transitions then share a replaced slot).
    """
    _check_path(path, graph)
    entries: list[PlanEntry] = []

    def original(node: int) -> PlanEntry:
        return PlanEntry(
            kind="original",
            audio_time=0.0,
            clip_id=graph.clip_ids[node],
            frame_index=int(graph.frame_indices[node]),
        )

    def interpolated(src: int, dst: int) -> PlanEntry:
        return PlanEntry(
            kind="interpolated",
            audio_time=0.0,
            blend_prev=_bracket(graph, src, before=True),
            blend_next=_bracket(graph, dst, before=False),
        )

    if preserve_length:
        entries = [original(int(node)) for node in path.nodes]
        for t in range(1, path.length):
            if path.edge_kinds[t - 1] == "transition":
                src, dst = int(path.nodes[t - 1]), int(path.nodes[t])
                entries[t - 1] = interpolated(src, dst)
                entries[t] = interpolated(src, dst)
    else:
        entries.append(original(int(path.nodes[0])))
        for t in range(1, path.length):
            src, dst = int(path.nodes[t - 1]), int(path.nodes[t])
            if path.edge_kinds[t - 1] == "transition":
                entries.append(interpolated(src, dst))
                entries.append(interpolated(src, dst))
            entries.append(original(dst))
    timed = [
        PlanEntry(
            kind=e.kind,
            audio_time=i / graph.fps,
            clip_id=e.clip_id,
            frame_index=e.frame_index,
            blend_prev=e.blend_prev,
            blend_next=e.blend_next,
        )
        for i, e in enumerate(entries)
    ]
    return RenderPlan(fps=graph.fps, entries=tuple(timed))


def smooth_transitions(
    path: RetrievedPath, graph: MotionGraph, preserve_length: bool = True
) -> MotionSequence:
    """Pose track of the path with two slerped poses bridging each transition.

    The bridging poses sit at fractions 1/3 and 2/3 between the transition's
    boundary poses (root translation interpolated linearly). With
    ``preserve_length`` they replace the boundary poses themselves, keeping
    the track length equal to the path length.
    """
    _check_path(path, graph)
    rotations: list[Array] = []
    translations: list[Array] = []

    def emit(rot: Array, trans: Array) -> None:
        rotations.append(rot)
        translations.append(trans)

    def blended(src: int, dst: int, fraction: float) -> tuple[Array, Array]:
        rot = slerp(graph.rotations[src], graph.rotations[dst], fraction)
        trans = (1.0 - fraction) * graph.root_translations[src] + fraction * graph.root_translations[dst]
        return rot, trans

    if preserve_length:
        for t, node in enumerate(path.nodes):
            emit(graph.rotations[int(node)], graph.root_translations[int(node)])
        for t in range(1, path.length):
            if path.edge_kinds[t - 1] == "transition":
                src, dst = int(path.nodes[t - 1]), int(path.nodes[t])
                rotations[t - 1], translations[t - 1] = blended(src, dst, _BLEND_FRACTIONS[0])
                rotations[t], translations[t] = blended(src, dst, _BLEND_FRACTIONS[1])
    else:
        emit(graph.rotations[int(path.nodes[0])], graph.root_translations[int(path.nodes[0])])
        for t in range(1, path.length):
            src, dst = int(path.nodes[t - 1]), int(path.nodes[t])
            if path.edge_kinds[t - 1] == "transition":
                for fraction in _BLEND_FRACTIONS:
                    emit(*blended(src, dst, fraction))
            emit(graph.rotations[dst], graph.root_translations[dst])
    return MotionSequence(np.stack(rotations), np.stack(translations), fps=graph.fps)
