"""Time-aligned path retrieval: hybrid motion distance plus pruned beam search.

A query motion of T frames is matched to a length-T walk through the motion
graph. Each frame-to-node distance blends the mean upper-body quaternion
angle with the mean upper-body joint-position distance; by default both sides
are canonicalized to root-relative coordinates so global orientation and
translation never influence the match.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SearchError
from .graph import CONTINUOUS, EDGE_KIND_NAMES, TRANSITION, MotionGraph
from .kinematics import (
    IDENTITY_QUAT,
    Pose,
    forward_kinematics,
    quat_angular_distance,
    quat_conjugate,
    quat_rotate,
)
from .motion_io import MotionSequence

Array = np.ndarray


@dataclass(frozen=True)
class MetricWeights:
    """Balancing weights for the hybrid distance.

    ``lambda_r`` scales the rotational term (radians) and ``lambda_p`` the
    positional term (meters, or bone-lengths when ``normalize_positions`` is
    set). ``absolute_positions`` is an audit switch that compares raw
    world-space positions instead of root-relative ones.
    """

    lambda_r: float = 1.0
    lambda_p: float = 1.0
    absolute_positions: bool = False
    normalize_positions: bool = False

    def __post_init__(self) -> None:
        if self.lambda_r < 0 or self.lambda_p < 0:
            raise ValueError("metric weights must be non-negative")
        if self.lambda_r == 0 and self.lambda_p == 0:
            raise ValueError("at least one metric weight must be positive")


@dataclass(frozen=True, eq=False)
class RetrievedPath:
    """A time-aligned walk: one node per query frame.

    ``step_costs[0]`` is the initial frame distance; ``step_costs[t]`` for
    t >= 1 is the frame distance plus the transition penalty when the edge
    into step t is a transition edge. ``total_cost`` is their sum.
    """

    nodes: Array
    edge_kinds: tuple[str, ...]
    step_costs: Array
    total_cost: float

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(self.nodes, dtype=np.int64)
        costs = np.ascontiguousarray(self.step_costs, dtype=np.float64)
        if nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("path must contain at least one node")
        if len(self.edge_kinds) != nodes.size - 1:
            raise ValueError("edge_kinds must have one entry per step after the first")
        if costs.shape != nodes.shape:
            raise ValueError("step_costs must align with nodes")
        nodes.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "step_costs", costs)
        object.__setattr__(self, "edge_kinds", tuple(self.edge_kinds))

    @property
    def length(self) -> int:
        return int(self.nodes.size)

    @property
    def transition_count(self) -> int:
        return sum(1 for kind in self.edge_kinds if kind == "transition")


class _QueryContext:
    """Precomputed upper-body features for one graph plus one query."""

    def __init__(self, graph: MotionGraph, query: MotionSequence, weights: MetricWeights):
        skeleton = graph.skeleton
        if query.joint_count != skeleton.joint_count:
            raise SearchError(
                f"query has {query.joint_count} joints, graph skeleton has {skeleton.joint_count}"
            )
        upper = skeleton.upper_body
        self.weights = weights
        self.node_rotations = graph.rotations[:, upper]  # (N, U, 4)
        if weights.absolute_positions:
            node_positions = graph.positions
            query_positions = forward_kinematics(skeleton, query.rotations, query.root_translations)
        else:
            # express node positions relative to each node's root frame, and FK the
            # query with its root pinned to identity/origin (same canonical frame)
            root_inv = quat_conjugate(graph.rotations[:, 0])[:, None, :]
            node_positions = quat_rotate(
                root_inv, graph.positions - graph.root_translations[:, None, :]
            )
            pinned = np.array(query.rotations)
            pinned[:, 0] = IDENTITY_QUAT
            query_positions = forward_kinematics(
                skeleton, pinned, np.zeros((query.frame_count, 3))
            )
        self.node_positions = node_positions[:, upper]  # (N, U, 3)
        self.query_rotations = query.rotations[:, upper]  # (T, U, 4)
        self.query_positions = query_positions[:, upper]  # (T, U, 3)
        self.position_scale = 1.0
        if weights.normalize_positions:
            bone = np.linalg.norm(skeleton.rest_offsets[upper], axis=1).mean()
            if bone <= 0:
                raise SearchError("cannot normalize positions: upper-body bone lengths are zero")
            self.position_scale = float(bone)

    def distances(self, frame: int, node_ids: Array) -> Array:
        """Hybrid distance of query frame ``frame`` to every node in ``node_ids``."""
        q = self.query_rotations[frame]  # (U, 4)
        rots = self.node_rotations[node_ids]  # (m, U, 4)
        d_r = quat_angular_distance(rots, q).mean(axis=1)
        delta = self.node_positions[node_ids] - self.query_positions[frame]
        d_p = np.sqrt((delta**2).sum(axis=2)).mean(axis=1) / self.position_scale
        return self.weights.lambda_r * d_r + self.weights.lambda_p * d_p


def hybrid_distance(
    query_pose: Pose,
    node_index: int,
    graph: MotionGraph,
    weights: MetricWeights = MetricWeights(),
) -> float:
    """Hybrid rotation/position distance between one query pose and one node."""
    query = MotionSequence(
        query_pose.rotations[None, :, :], query_pose.root_translation[None, :], fps=graph.fps
    )
    ctx = _QueryContext(graph, query, weights)
    return float(ctx.distances(0, np.asarray([node_index]))[0])


def _prune(
    states: list[tuple[float, int, tuple[int, ...]]],
    beam_width: int,
    gamma: float,
    progress: float,
) -> list[tuple[float, int, tuple[int, ...]]]:
    states.sort()
    cutoff = states[0][0] + gamma * progress
    kept = [s for s in states[:beam_width] if s[0] <= cutoff]
    return kept


def beam_search(
    graph: MotionGraph,
    query: MotionSequence,
    weights: MetricWeights = MetricWeights(),
    beam_width: int = 200,
    gamma: float = 1.5,
    beta: float = 0.1,
) -> RetrievedPath:
    """Minimum-cost time-aligned walk for the query, by pruned beam search.

    The frontier starts with every node scored against the first query frame.
    Each step advances one query frame along all outgoing edges, adding the
    frame distance plus ``beta`` for transition edges. Per step, states on
    the same node merge keeping the cheaper one, only the ``beam_width``
    cheapest states survive, and states worse than the current minimum by
    more than ``gamma * (step / T)`` are dropped. Ties break deterministically
    by lower cost, then smaller node index, then lexicographically smaller
    path.
    """
    if graph.node_count == 0:
        raise SearchError("graph has no nodes")
    total = query.frame_count
    if total < 1:
        raise SearchError("query must have at least one frame")
    if beam_width < 1:
        raise SearchError("beam width must be at least 1")
    ctx = _QueryContext(graph, query, weights)
    adjacency = graph.out_edges()

    all_nodes = np.arange(graph.node_count, dtype=np.int64)
    init = ctx.distances(0, all_nodes)
    states = [(float(init[i]), int(i), (int(i),)) for i in all_nodes]
    states = _prune(states, beam_width, gamma, 1.0 / total)

    for tau in range(1, total):
        successors = sorted({dst for _, node, _ in states for dst, _ in adjacency[node]})
        if not successors:
            raise SearchError(f"search stranded: no outgoing edges at step {tau + 1} of {total}")
        ids = np.asarray(successors, dtype=np.int64)
        dist = ctx.distances(tau, ids)
        dist_by_node = dict(zip(successors, dist))
        best: dict[int, tuple[float, tuple[int, ...]]] = {}
        for cost, node, path in states:
            for dst, kind in adjacency[node]:
                step = dist_by_node[dst] + (beta if kind == TRANSITION else 0.0)
                entry = (cost + step, path + (dst,))
                held = best.get(dst)
                if held is None or entry < held:
                    best[dst] = entry
        states = [(cost, node, path) for node, (cost, path) in best.items()]
        if not states:
            raise SearchError(f"search stranded: frontier empty at step {tau + 1} of {total}")
        states = _prune(states, beam_width, gamma, (tau + 1) / total)

    cost, _, path = min(states)
    return _finish_path(graph, ctx, adjacency, path, beta, cost)


def _finish_path(
    graph: MotionGraph,
    ctx: _QueryContext,
    adjacency: list[list[tuple[int, int]]],
    path: tuple[int, ...],
    beta: float,
    total_cost: float,
) -> RetrievedPath:
    kinds = []
    for t in range(1, len(path)):
        kind = next((k for dst, k in adjacency[path[t - 1]] if dst == path[t]), None)
        if kind is None:
            raise SearchError(f"internal error: path uses a missing edge {path[t-1]}->{path[t]}")
        kinds.append(EDGE_KIND_NAMES[kind])
    nodes = np.asarray(path, dtype=np.int64)
    step_costs = np.empty(len(path))
    for t, node in enumerate(path):
        step_costs[t] = ctx.distances(t, np.asarray([node]))[0]
        if t > 0 and kinds[t - 1] == "transition":
            step_costs[t] += beta
    return RetrievedPath(
        nodes=nodes,
        edge_kinds=tuple(kinds),
        step_costs=step_costs,
        total_cost=float(total_cost),
    )
