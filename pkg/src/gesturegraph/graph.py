"""Motion-graph construction: nodes, continuous edges, transition edges, SCC pruning.

Nodes are whole video frames carrying pose, forward-kinematics positions, and
central-difference velocities. Continuous edges chain consecutive frames of
one clip; transition edges connect non-adjacent frames whose position and
velocity discrepancies stay within adaptive per-node thresholds for at least
a consensus fraction of joints. The graph is finally restricted to its
largest strongly connected component so any retrieved path can always
continue.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import GraphError
from .kinematics import Pose, Skeleton, central_difference_velocities, forward_kinematics
from .motion_io import MotionDocument

Array = np.ndarray

logger = logging.getLogger(__name__)

CONTINUOUS = 0
TRANSITION = 1

EDGE_KIND_NAMES = {CONTINUOUS: "continuous", TRANSITION: "transition"}

# chunk of source rows evaluated at once during pair scoring; bounds peak memory
_PAIR_CHUNK = 64


@dataclass(frozen=True, eq=False)
class GraphNode:
    """Read-only view of one graph node."""

    clip_id: str
    frame_index: int
    pose: Pose
    positions: Array
    velocities: Array
    focal_length: float | None


@dataclass(eq=False)
class MotionGraph:
    """Immutable-by-convention motion graph backed by stacked node arrays."""

    skeleton: Skeleton
    fps: float
    clip_ids: tuple[str, ...]
    frame_indices: Array
    rotations: Array
    root_translations: Array
    positions: Array
    velocities: Array
    continuous_edges: Array
    transition_edges: Array
    focal_lengths: Array | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.clip_ids)
        j = self.skeleton.joint_count
        self.frame_indices = np.ascontiguousarray(self.frame_indices, dtype=np.int64)
        self.rotations = np.ascontiguousarray(self.rotations, dtype=np.float64)
        self.root_translations = np.ascontiguousarray(self.root_translations, dtype=np.float64)
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        self.velocities = np.ascontiguousarray(self.velocities, dtype=np.float64)
        self.continuous_edges = np.ascontiguousarray(self.continuous_edges, dtype=np.int64).reshape(-1, 2)
        self.transition_edges = np.ascontiguousarray(self.transition_edges, dtype=np.int64).reshape(-1, 2)
        shapes = {
            "frame_indices": (self.frame_indices, (n,)),
            "rotations": (self.rotations, (n, j, 4)),
            "root_translations": (self.root_translations, (n, 3)),
            "positions": (self.positions, (n, j, 3)),
            "velocities": (self.velocities, (n, j, 3)),
        }
        for name, (arr, expected) in shapes.items():
            if arr.shape != expected:
                raise GraphError(f"{name} must have shape {expected}, got {arr.shape}")
        if not np.all(np.isfinite(self.positions)) or not np.all(np.isfinite(self.velocities)):
            raise GraphError("node positions and velocities must be finite")
        if self.focal_lengths is not None:
            self.focal_lengths = np.ascontiguousarray(self.focal_lengths, dtype=np.float64)
            if self.focal_lengths.shape != (n,):
                raise GraphError(f"focal_lengths must have shape ({n},)")
        self._validate_edges()
        for arr in (
            self.frame_indices,
            self.rotations,
            self.root_translations,
            self.positions,
            self.velocities,
            self.continuous_edges,
            self.transition_edges,
        ):
            arr.setflags(write=False)

    def _validate_edges(self) -> None:
        n = self.node_count
        for name, edges in (("continuous", self.continuous_edges), ("transition", self.transition_edges)):
            if edges.size and (edges.min() < 0 or edges.max() >= n):
                bad = edges[(edges < 0).any(axis=1) | (edges >= n).any(axis=1)][0]
                raise GraphError(f"{name} edge ({bad[0]}, {bad[1]}) references a node outside 0..{n - 1}")
            if edges.shape[0] and np.unique(edges, axis=0).shape[0] != edges.shape[0]:
                raise GraphError(f"duplicate {name} edges")
        clip_codes = self._clip_codes()
        if self.continuous_edges.size:
            src, dst = self.continuous_edges.T
            same_clip = clip_codes[src] == clip_codes[dst]
            next_frame = self.frame_indices[dst] == self.frame_indices[src] + 1
            if not np.all(same_clip & next_frame):
                bad = int(np.flatnonzero(~(same_clip & next_frame))[0])
                s, d = self.continuous_edges[bad]
                raise GraphError(
                    f"continuous edge ({s}, {d}) must link consecutive frames of one clip"
                )
        if self.transition_edges.size:
            src, dst = self.transition_edges.T
            if np.any(src == dst):
                raise GraphError("transition edges must not be self-edges")
            same_clip = clip_codes[src] == clip_codes[dst]
            adjacent = np.abs(self.frame_indices[dst] - self.frame_indices[src]) <= 1
            if np.any(same_clip & adjacent):
                bad = int(np.flatnonzero(same_clip & adjacent)[0])
                s, d = self.transition_edges[bad]
                raise GraphError(
                    f"transition edge ({s}, {d}) links adjacent frames of one clip"
                )

    def _clip_codes(self) -> Array:
        table = {cid: i for i, cid in enumerate(dict.fromkeys(self.clip_ids))}
        return np.asarray([table[cid] for cid in self.clip_ids], dtype=np.int64)

    @property
    def node_count(self) -> int:
        return len(self.clip_ids)

    def node(self, index: int) -> GraphNode:
        focal = None
        if self.focal_lengths is not None and np.isfinite(self.focal_lengths[index]):
            focal = float(self.focal_lengths[index])
        return GraphNode(
            clip_id=self.clip_ids[index],
            frame_index=int(self.frame_indices[index]),
            pose=Pose(self.rotations[index], self.root_translations[index]),
            positions=self.positions[index],
            velocities=self.velocities[index],
            focal_length=focal,
        )

    def all_edges(self) -> Array:
        return np.vstack([self.continuous_edges, self.transition_edges])

    def out_edges(self) -> list[list[tuple[int, int]]]:
        """Adjacency as per-node sorted lists of (dst, kind)."""
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(self.node_count)]
        for s, d in self.continuous_edges:
            adjacency[int(s)].append((int(d), CONTINUOUS))
        for s, d in self.transition_edges:
            adjacency[int(s)].append((int(d), TRANSITION))
        for entry in adjacency:
            entry.sort()
        return adjacency


def build_nodes(doc: MotionDocument) -> MotionGraph:
    """Create one node per frame per clip, with continuous edges only.

    Positions come from forward kinematics and velocities from per-clip
    central differencing. Clips shorter than 2 frames cannot produce a
    velocity and are skipped with a warning.
    """
    skeleton = doc.skeleton
    clip_ids: list[str] = []
    frame_indices: list[Array] = []
    rotations: list[Array] = []
    translations: list[Array] = []
    positions: list[Array] = []
    velocities: list[Array] = []
    focal: list[Array] = []
    continuous: list[Array] = []
    any_focal = False
    offset = 0
    for clip in doc.clips:
        t = clip.motion.frame_count
        if t < 2:
            warnings.warn(
                f"clip '{clip.clip_id}' has {t} frame(s); velocities need at least 2 - skipped",
                stacklevel=2,
            )
            continue
        pos = forward_kinematics(skeleton, clip.motion.rotations, clip.motion.root_translations)
        vel = central_difference_velocities(pos, doc.fps)
        clip_ids.extend([clip.clip_id] * t)
        frame_indices.append(np.arange(t, dtype=np.int64))
        rotations.append(clip.motion.rotations)
        translations.append(clip.motion.root_translations)
        positions.append(pos)
        velocities.append(vel)
        f = clip.metadata.get("focal_length")
        focal.append(np.full(t, float(f) if f is not None else np.nan))
        if f is not None:
            any_focal = True
        idx = np.arange(offset, offset + t - 1, dtype=np.int64)
        continuous.append(np.stack([idx, idx + 1], axis=1))
        offset += t
    if offset == 0:
        return MotionGraph(
            skeleton=skeleton,
            fps=doc.fps,
            clip_ids=(),
            frame_indices=np.empty(0, dtype=np.int64),
            rotations=np.empty((0, skeleton.joint_count, 4)),
            root_translations=np.empty((0, 3)),
            positions=np.empty((0, skeleton.joint_count, 3)),
            velocities=np.empty((0, skeleton.joint_count, 3)),
            continuous_edges=np.empty((0, 2), dtype=np.int64),
            transition_edges=np.empty((0, 2), dtype=np.int64),
        )
    return MotionGraph(
        skeleton=skeleton,
        fps=doc.fps,
        clip_ids=tuple(clip_ids),
        frame_indices=np.concatenate(frame_indices),
        rotations=np.concatenate(rotations),
        root_translations=np.concatenate(translations),
        positions=np.concatenate(positions),
        velocities=np.concatenate(velocities),
        focal_lengths=np.concatenate(focal) if any_focal else None,
        continuous_edges=np.concatenate(continuous),
        transition_edges=np.empty((0, 2), dtype=np.int64),
    )


def adaptive_thresholds(graph: MotionGraph, lambda_p: float = 1.3, lambda_v: float = 1.3) -> tuple[Array, Array]:
    """Per-node transition thresholds (tau_p, tau_v), both shaped (N,).

    A node's threshold is the scaled mean Frobenius distance to its intra-clip
    neighbor frames: interior nodes average both neighbors, clip-boundary
    nodes use their single neighbor directly. Nodes of an isolated
    single-frame clip have no neighbor and raise.
    """
    n = graph.node_count
    d_next_p = np.full(n, np.nan)
    d_prev_p = np.full(n, np.nan)
    d_next_v = np.full(n, np.nan)
    d_prev_v = np.full(n, np.nan)
    if graph.continuous_edges.size:
        src, dst = graph.continuous_edges.T
        dp = np.sqrt(((graph.positions[src] - graph.positions[dst]) ** 2).sum(axis=(1, 2)))
        dv = np.sqrt(((graph.velocities[src] - graph.velocities[dst]) ** 2).sum(axis=(1, 2)))
        d_next_p[src] = dp
        d_prev_p[dst] = dp
        d_next_v[src] = dv
        d_prev_v[dst] = dv
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)
        tau_p = lambda_p * np.nanmean(np.stack([d_next_p, d_prev_p]), axis=0)
        tau_v = lambda_v * np.nanmean(np.stack([d_next_v, d_prev_v]), axis=0)
    isolated = np.isnan(tau_p) | np.isnan(tau_v)
    if np.any(isolated):
        bad = int(np.flatnonzero(isolated)[0])
        raise GraphError(
            f"node {bad} (clip '{graph.clip_ids[bad]}') has no intra-clip neighbor; "
            "thresholds are undefined for single-frame clips"
        )
    return tau_p, tau_v


def _score_chunk(
    lo: int,
    hi: int,
    positions: Array,
    velocities: Array,
    pos_sq: Array,
    vel_sq: Array,
    pos_norm: Array,
    vel_norm: Array,
    tau_p: Array,
    tau_v: Array,
    clip_codes: Array,
    frame_indices: Array,
    th: float,
    prefilter: bool,
) -> Array:
    """Evaluate the transition criterion for source rows lo..hi against all nodes."""
    n, j, _ = positions.shape
    tau_p2 = tau_p * tau_p
    tau_v2 = tau_v * tau_v
    forbidden = (clip_codes[lo:hi, None] == clip_codes[None, :]) & (
        np.abs(frame_indices[lo:hi, None] - frame_indices[None, :]) <= 1
    )
    if prefilter:
        # reverse triangle inequality: | |P_s^j| - |P_t^j| | > tau forces joint j to
        # fail, so pairs that cannot reach the consensus fraction are dropped exactly
        forced = (
            np.abs(pos_norm[lo:hi, None, :] - pos_norm[None, :, :]) > tau_p[lo:hi, None, None]
        ) | (np.abs(vel_norm[lo:hi, None, :] - vel_norm[None, :, :]) > tau_v[lo:hi, None, None])
        best_frac = (j - forced.sum(axis=2)) / j
        candidate = (best_frac >= th) & ~forbidden
    else:
        candidate = ~forbidden
    if not candidate.any():
        return np.empty((0, 2), dtype=np.int64)

    # squared distances are assembled as (-2 a.b + |a|^2) + |b|^2 in BOTH paths,
    # keeping threshold comparisons consistent between them; coincident inputs
    # cancel to exactly zero either way
    if candidate.mean() > 0.05:
        # dense path: cross terms as one batched matmul per joint, in-place math
        buf = np.matmul(positions[lo:hi].transpose(1, 0, 2), positions.transpose(1, 2, 0))
        buf *= -2.0  # (J, S, N)
        buf += pos_sq[lo:hi].T[:, :, None]
        buf += pos_sq.T[:, None, :]
        passed = buf <= tau_p2[lo:hi][None, :, None]
        np.matmul(velocities[lo:hi].transpose(1, 0, 2), velocities.transpose(1, 2, 0), out=buf)
        buf *= -2.0
        buf += vel_sq[lo:hi].T[:, :, None]
        buf += vel_sq.T[:, None, :]
        passed &= buf <= tau_v2[lo:hi][None, :, None]
        frac = passed.sum(axis=0) / j  # (S, N)
        s_rel, t_idx = np.nonzero((frac >= th) & candidate)
        return np.stack([s_rel + lo, t_idx], axis=1).astype(np.int64)

    # sparse path: evaluate only surviving pairs
    s_rel, t_idx = np.nonzero(candidate)
    s_idx = s_rel + lo
    edges = []
    for off in range(0, s_idx.size, 200_000):
        block = slice(off, off + 200_000)
        ss, tt = s_idx[block], t_idx[block]
        dp2 = -2.0 * np.einsum("cjk,cjk->cj", positions[ss], positions[tt])
        dp2 += pos_sq[ss]
        dp2 += pos_sq[tt]
        dv2 = -2.0 * np.einsum("cjk,cjk->cj", velocities[ss], velocities[tt])
        dv2 += vel_sq[ss]
        dv2 += vel_sq[tt]
        passed = (dp2 <= tau_p2[ss, None]) & (dv2 <= tau_v2[ss, None])
        keep = passed.sum(axis=1) / j >= th
        if np.any(keep):
            edges.append(np.stack([ss[keep], tt[keep]], axis=1))
    if not edges:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(edges)


def propose_transition_edges(
    graph: MotionGraph,
    lambda_p: float = 1.3,
    lambda_v: float = 1.3,
    th: float = 0.95,
    *,
    prefilter: bool = True,
    workers: int = 1,
) -> Array:
    """All directed transition edges admitted by the dual-threshold criterion.

    An ordered pair (s, t) gains an edge when at least ``th`` of the joints
    keep both their positional and velocity discrepancies within the source
    node's thresholds. Pairs that are the same frame or adjacent frames of
    one clip are never eligible. Results are sorted by (src, dst) and are
    identical with any worker count and with the prefilter on or off.
    """
    n = graph.node_count
    j = graph.skeleton.joint_count
    if n == 0:
        return np.empty((0, 2), dtype=np.int64)
    tau_p, tau_v = adaptive_thresholds(graph, lambda_p, lambda_v)
    clip_codes = graph._clip_codes()
    pos_sq = (graph.positions**2).sum(axis=2)  # (N, J)
    vel_sq = (graph.velocities**2).sum(axis=2)
    pos_norm = np.sqrt(pos_sq)
    vel_norm = np.sqrt(vel_sq)

    chunks = [(lo, min(lo + _PAIR_CHUNK, n)) for lo in range(0, n, _PAIR_CHUNK)]

    def run(chunk: tuple[int, int]) -> Array:
        return _score_chunk(
            chunk[0],
            chunk[1],
            graph.positions,
            graph.velocities,
            pos_sq,
            vel_sq,
            pos_norm,
            vel_norm,
            tau_p,
            tau_v,
            clip_codes,
            graph.frame_indices,
            th,
            prefilter,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]
    edges = np.concatenate(results) if results else np.empty((0, 2), dtype=np.int64)
    if edges.size:
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
    logger.info(
        "transition scan: %d nodes, %d candidate pairs admitted", n, edges.shape[0]
    )
    return edges


def largest_scc(node_count: int, edges: Array) -> list[int]:
    """Node indices of the largest strongly connected component, sorted.

    Iterative Tarjan, linear in nodes plus edges. Ties between equally large
    components go to the one containing the smallest node index.
    """
    adjacency: list[list[int]] = [[] for _ in range(node_count)]
    for s, d in np.asarray(edges, dtype=np.int64).reshape(-1, 2):
        adjacency[int(s)].append(int(d))
    index = np.full(node_count, -1, dtype=np.int64)
    low = np.zeros(node_count, dtype=np.int64)
    on_stack = np.zeros(node_count, dtype=bool)
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(node_count):
        if index[root] != -1:
            continue
        work: list[list[int]] = [[root, 0]]
        while work:
            v, edge_pos = work[-1]
            if edge_pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while work[-1][1] < len(adjacency[v]):
                w = adjacency[v][work[-1][1]]
                work[-1][1] += 1
                if index[w] == -1:
                    work.append([w, 0])
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    component.append(w)
                    if w == v:
                        break
                components.append(component)
    best = max(components, key=lambda c: (len(c), -min(c)))
    return sorted(best)


def prune_to_largest_scc(graph: MotionGraph) -> MotionGraph:
    """Induced subgraph on the largest strongly connected component.

    Continuous edges between retained nodes are preserved as-is; transition
    edges survive only when both endpoints are retained. A largest component
    of a single node means the graph cannot loop and a warning is emitted.
    """
    if graph.node_count == 0:
        raise GraphError("cannot prune an empty graph")
    keep = largest_scc(graph.node_count, graph.all_edges())
    if len(keep) == 1:
        warnings.warn(
            "largest strongly connected component has a single node; the graph is degenerate",
            stacklevel=2,
        )
    keep_arr = np.asarray(keep, dtype=np.int64)
    remap = np.full(graph.node_count, -1, dtype=np.int64)
    remap[keep_arr] = np.arange(len(keep), dtype=np.int64)

    def remap_edges(edges: Array) -> Array:
        if not edges.size:
            return edges.reshape(0, 2)
        mask = (remap[edges[:, 0]] >= 0) & (remap[edges[:, 1]] >= 0)
        return remap[edges[mask]]

    meta = dict(graph.meta)
    meta["pruned_from_nodes"] = graph.node_count
    meta["retained_original_indices"] = [int(i) for i in keep]
    return MotionGraph(
        skeleton=graph.skeleton,
        fps=graph.fps,
        clip_ids=tuple(graph.clip_ids[i] for i in keep),
        frame_indices=graph.frame_indices[keep_arr],
        rotations=graph.rotations[keep_arr],
        root_translations=graph.root_translations[keep_arr],
        positions=graph.positions[keep_arr],
        velocities=graph.velocities[keep_arr],
        focal_lengths=None if graph.focal_lengths is None else graph.focal_lengths[keep_arr],
        continuous_edges=remap_edges(graph.continuous_edges),
        transition_edges=remap_edges(graph.transition_edges),
        meta=meta,
    )


def build_graph(
    doc: MotionDocument,
    *,
    lambda_p: float = 1.3,
    lambda_v: float = 1.3,
    th: float = 0.95,
    prefilter: bool = True,
    keep_all_sccs: bool = False,
    workers: int = 1,
) -> MotionGraph:
    """Full build: nodes, continuous edges, transition edges, and SCC pruning."""
    base = build_nodes(doc)
    if base.node_count == 0:
        raise GraphError("no clip with at least 2 frames; cannot build a graph")
    transitions = propose_transition_edges(
        base, lambda_p, lambda_v, th, prefilter=prefilter, workers=workers
    )
    graph = MotionGraph(
        skeleton=base.skeleton,
        fps=base.fps,
        clip_ids=base.clip_ids,
        frame_indices=base.frame_indices,
        rotations=base.rotations,
        root_translations=base.root_translations,
        positions=base.positions,
        velocities=base.velocities,
        focal_lengths=base.focal_lengths,
        continuous_edges=base.continuous_edges,
        transition_edges=transitions,
        meta={
            "params": {
                "lambda_p": lambda_p,
                "lambda_v": lambda_v,
                "th": th,
                "prefilter": prefilter,
                "keep_all_sccs": keep_all_sccs,
            }
        },
    )
    if not keep_all_sccs:
        graph = prune_to_largest_scc(graph)
    return graph
