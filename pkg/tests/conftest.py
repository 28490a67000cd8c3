import numpy as np
import pytest

import gesturegraph as gg

# (criterion name, passed) tuples registered by the acceptance suite
ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")


def chain_skeleton(joints: int = 5, upper=None) -> gg.Skeleton:
    """Chain skeleton with unit x offsets; upper body defaults to all non-root joints."""
    parents = [-1] + list(range(joints - 1))
    offsets = np.zeros((joints, 3))
    offsets[1:, 0] = 1.0
    return gg.Skeleton(
        parents=parents,
        rest_offsets=offsets,
        upper_body=list(range(1, joints)) if upper is None else upper,
    )


def random_unit_quats(rng: np.random.Generator, shape) -> np.ndarray:
    return gg.quat_normalize(rng.standard_normal(tuple(shape) + (4,)))


def sinusoid_rotations(
    frames: int, joints: int, period: int, seed: int = 0, amplitude: float = 0.5
) -> np.ndarray:
    """Smooth distinct-pose joint motion; frame t samples phase (t mod period)."""
    rng = np.random.default_rng(seed)
    axes = rng.standard_normal((joints, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    phases = rng.uniform(0.0, 2.0 * np.pi, joints)
    amps = amplitude * (0.5 + rng.uniform(size=joints))
    rotations = np.empty((frames, joints, 4))
    for t in range(frames):
        angles = amps * np.sin(2.0 * np.pi * (t % period) / period + phases)
        rotations[t] = gg.quat_from_axis_angle(axes * angles[:, None])
    return rotations


def looping_motion_doc(
    frames: int = 90, joints: int = 5, fps: float = 30.0, seed: int = 0
) -> gg.MotionDocument:
    """One clip whose last two frames repeat its first two (period frames-2).

    The repeat makes the wrap-around transition from the last frame to frame 0
    hold under the edge criterion by construction: its positional discrepancy
    equals one ordinary frame step and its boundary velocities match exactly.
    """
    skeleton = chain_skeleton(joints)
    rotations = sinusoid_rotations(frames, joints, period=frames - 2, seed=seed)
    motion = gg.MotionSequence(rotations, np.zeros((frames, 3)), fps=fps)
    return gg.MotionDocument(skeleton=skeleton, clips=(gg.Clip("loop", motion),), fps=fps)


def graph_from_arrays(
    skeleton,
    rotations,
    continuous,
    transitions,
    clip_ids=None,
    frame_indices=None,
    root_translations=None,
    positions=None,
    velocities=None,
    fps: float = 30.0,
) -> gg.MotionGraph:
    """Assemble a MotionGraph directly; positions default to FK, velocities to zero."""
    rotations = np.asarray(rotations, dtype=np.float64)
    n = rotations.shape[0]
    if root_translations is None:
        root_translations = np.zeros((n, 3))
    if positions is None:
        positions = gg.forward_kinematics(skeleton, rotations, root_translations)
    if velocities is None:
        velocities = np.zeros_like(positions)
    if clip_ids is None:
        clip_ids = tuple("c0" for _ in range(n))
    if frame_indices is None:
        frame_indices = np.arange(n, dtype=np.int64)
    return gg.MotionGraph(
        skeleton=skeleton,
        fps=fps,
        clip_ids=tuple(clip_ids),
        frame_indices=np.asarray(frame_indices, dtype=np.int64),
        rotations=rotations,
        root_translations=np.asarray(root_translations, dtype=np.float64),
        positions=np.asarray(positions, dtype=np.float64),
        velocities=np.asarray(velocities, dtype=np.float64),
        continuous_edges=np.asarray(continuous, dtype=np.int64).reshape(-1, 2),
        transition_edges=np.asarray(transitions, dtype=np.int64).reshape(-1, 2),
    )


def random_walk_graph(
    rng: np.random.Generator, max_nodes: int = 30, max_extra_degree: int = 3, joints: int = 4
) -> gg.MotionGraph:
    """Strongly connected test graph: one clip chain, a wrap transition, extras.

    Out-degree is at most 1 + max_extra_degree. Node poses are random, so all
    frame-to-node distances are generic (no accidental cost ties).
    """
    n = int(rng.integers(5, max_nodes + 1))
    skeleton = chain_skeleton(joints)
    rotations = random_unit_quats(rng, (n, joints))
    continuous = [(i, i + 1) for i in range(n - 1)]
    transitions = {(n - 1, 0)}
    for s in range(n):
        budget = int(rng.integers(0, max_extra_degree + 1))
        for _ in range(budget):
            t = int(rng.integers(0, n))
            if abs(t - s) <= 1 or (s, t) in transitions or (s == n - 1 and t == 0):
                continue
            transitions.add((s, t))
    return graph_from_arrays(
        skeleton,
        rotations,
        continuous,
        sorted(transitions),
        root_translations=rng.standard_normal((n, 3)) * 0.1,
    )


def reference_distance_matrix(
    graph: gg.MotionGraph,
    query: gg.MotionSequence,
    lambda_r: float = 1.0,
    lambda_p: float = 1.0,
) -> np.ndarray:
    """Straight-line re-implementation of the hybrid metric (root-relative mode)."""
    skeleton = graph.skeleton
    upper = [int(j) for j in skeleton.upper_body]
    t_count, n_count = query.frame_count, graph.node_count
    out = np.zeros((t_count, n_count))
    for t in range(t_count):
        q_rot = np.array(query.rotations[t])
        q_rot[0] = np.array([1.0, 0.0, 0.0, 0.0])
        q_pos = gg.forward_kinematics(skeleton, q_rot, np.zeros(3))
        for i in range(n_count):
            d_r = 0.0
            for j in upper:
                dot = abs(float(np.dot(query.rotations[t, j], graph.rotations[i, j])))
                d_r += 2.0 * np.arccos(min(dot, 1.0))
            d_r /= len(upper)
            root_inv = gg.quat_normalize(graph.rotations[i, 0] * np.array([1.0, -1, -1, -1]))
            rel = gg.quat_rotate(root_inv, graph.positions[i] - graph.root_translations[i])
            d_p = 0.0
            for j in upper:
                d_p += float(np.linalg.norm(q_pos[j] - rel[j]))
            d_p /= len(upper)
            out[t, i] = lambda_r * d_r + lambda_p * d_p
    return out


def enumerate_optimal_walk_cost(
    graph: gg.MotionGraph, distances: np.ndarray, beta: float
) -> float:
    """Exhaustive minimum over all time-aligned walks of length T (oracle)."""
    t_total = distances.shape[0]
    adjacency = graph.out_edges()
    best = np.inf
    for start in range(graph.node_count):
        stack = [(start, 1, float(distances[0, start]))]
        while stack:
            node, depth, cost = stack.pop()
            if cost >= best:
                continue
            if depth == t_total:
                best = cost
                continue
            for dst, kind in adjacency[node]:
                step = float(distances[depth, dst]) + (beta if kind == gg.graph.TRANSITION else 0.0)
                stack.append((dst, depth + 1, cost + step))
    return float(best)


def bfs_largest_scc(node_count: int, edges) -> list[int]:
    """O(N^2) reachability oracle for the largest strongly connected component."""
    adjacency = [[] for _ in range(node_count)]
    for s, d in edges:
        adjacency[int(s)].append(int(d))
    reach = []
    for start in range(node_count):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        reach.append(seen)
    assigned = [False] * node_count
    components = []
    for u in range(node_count):
        if assigned[u]:
            continue
        component = [v for v in range(node_count) if u in reach[v] and v in reach[u]]
        for v in component:
            assigned[v] = True
        components.append(component)
    return sorted(max(components, key=lambda c: (len(c), -min(c))))


@pytest.fixture
def loop_doc() -> gg.MotionDocument:
    return looping_motion_doc()


@pytest.fixture
def loop_graph(loop_doc) -> gg.MotionGraph:
    return gg.build_graph(loop_doc)
