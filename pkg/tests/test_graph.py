import numpy as np
import pytest

import gesturegraph as gg

from conftest import (
    bfs_largest_scc,
    chain_skeleton,
    graph_from_arrays,
    looping_motion_doc,
    random_unit_quats,
    sinusoid_rotations,
)


def doc_from_rotations(rotations_by_clip: dict, skeleton=None, fps=30.0) -> gg.MotionDocument:
    any_rot = next(iter(rotations_by_clip.values()))
    skeleton = skeleton or chain_skeleton(any_rot.shape[1])
    clips = tuple(
        gg.Clip(cid, gg.MotionSequence(rot, np.zeros((rot.shape[0], 3)), fps=fps))
        for cid, rot in rotations_by_clip.items()
    )
    return gg.MotionDocument(skeleton=skeleton, clips=clips, fps=fps)


class TestBuildNodes:
    def test_single_clip_counts(self):
        doc = doc_from_rotations({"a": sinusoid_rotations(90, 4, period=90)})
        base = gg.build_nodes(doc)
        assert base.node_count == 90
        assert base.continuous_edges.shape == (89, 2)
        assert base.transition_edges.shape == (0, 2)

    def test_two_clips_no_cross_edges(self):
        doc = doc_from_rotations(
            {"a": sinusoid_rotations(10, 4, period=10), "b": sinusoid_rotations(20, 4, period=20, seed=1)}
        )
        base = gg.build_nodes(doc)
        assert base.node_count == 30
        assert base.continuous_edges.shape == (28, 2)
        clip_of = np.array([0] * 10 + [1] * 20)
        for s, d in base.continuous_edges:
            assert clip_of[s] == clip_of[d]

    def test_constant_pose_gives_zero_velocities(self):
        rot = np.tile(gg.quat_normalize([0.9, 0.1, 0.2, 0.3]), (12, 4, 1))
        base = gg.build_nodes(doc_from_rotations({"a": rot}))
        assert np.array_equal(base.velocities, np.zeros_like(base.velocities))

    def test_short_clip_skipped_with_warning(self):
        doc = doc_from_rotations(
            {"tiny": sinusoid_rotations(1, 4, period=2), "ok": sinusoid_rotations(8, 4, period=8)}
        )
        with pytest.warns(UserWarning, match="tiny"):
            base = gg.build_nodes(doc)
        assert base.node_count == 8

    def test_positions_match_fk(self):
        doc = doc_from_rotations({"a": sinusoid_rotations(15, 4, period=15)})
        base = gg.build_nodes(doc)
        clip = doc.clips[0].motion
        expected = gg.forward_kinematics(doc.skeleton, clip.rotations, clip.root_translations)
        assert np.allclose(base.positions, expected, atol=1e-12)


class TestAdaptiveThresholds:
    def test_static_clip_zero_thresholds(self):
        rot = np.tile(gg.quat_normalize([1.0, 0, 0, 0]), (6, 3, 1))
        base = gg.build_nodes(doc_from_rotations({"a": rot}))
        tau_p, tau_v = gg.adaptive_thresholds(base)
        assert np.array_equal(tau_p, np.zeros(6))
        assert np.array_equal(tau_v, np.zeros(6))

    def test_uniform_linear_motion_scales_delta(self):
        # uniform translation: per-step positional Frobenius delta is constant
        skeleton = chain_skeleton(3)
        frames = 10
        rot = np.tile([1.0, 0, 0, 0], (frames, 3, 1))
        trans = np.zeros((frames, 3))
        trans[:, 0] = 0.1 * np.arange(frames)
        motion = gg.MotionSequence(rot, trans, fps=30.0)
        doc = gg.MotionDocument(skeleton, (gg.Clip("a", motion),), fps=30.0)
        base = gg.build_nodes(doc)
        delta = np.sqrt(3) * 0.1  # all 3 joints move together by 0.1
        tau_p, tau_v = gg.adaptive_thresholds(base, lambda_p=1.3, lambda_v=1.3)
        assert np.allclose(tau_p, 1.3 * delta, atol=1e-12)
        # uniform velocity everywhere: velocity deltas are zero
        assert np.allclose(tau_v, 0.0, atol=1e-12)

    def test_boundary_uses_single_neighbor(self):
        skeleton = chain_skeleton(3)
        rot = np.tile([1.0, 0, 0, 0], (4, 3, 1))
        trans = np.zeros((4, 3))
        trans[:, 0] = [0.0, 0.1, 0.3, 0.6]  # accelerating steps: 0.1, 0.2, 0.3
        motion = gg.MotionSequence(rot, trans, fps=30.0)
        base = gg.build_nodes(gg.MotionDocument(skeleton, (gg.Clip("a", motion),), fps=30.0))
        tau_p, _ = gg.adaptive_thresholds(base, lambda_p=1.0)
        root3 = np.sqrt(3)
        assert tau_p[0] == pytest.approx(0.1 * root3, abs=1e-12)  # first frame: next only
        assert tau_p[1] == pytest.approx(0.15 * root3, abs=1e-12)  # mean of 0.1 and 0.2
        assert tau_p[3] == pytest.approx(0.3 * root3, abs=1e-12)  # last frame: prev only

    def test_isolated_single_frame_clip_rejected(self):
        skeleton = chain_skeleton(3)
        graph = graph_from_arrays(
            skeleton,
            random_unit_quats(np.random.default_rng(0), (1, 3)),
            continuous=[],
            transitions=[],
        )
        with pytest.raises(gg.GraphError, match="single-frame"):
            gg.adaptive_thresholds(graph)


def consensus_fixture(passing_joints: int):
    """Two clips of hand-set positions/velocities where exactly ``passing_joints``
    of 20 joints keep both discrepancies inside the source node's thresholds."""
    joints = 20
    skeleton = chain_skeleton(joints)
    rng = np.random.default_rng(42)
    rotations = random_unit_quats(rng, (6, joints))
    base_p = rng.standard_normal((joints, 3))
    base_v = rng.standard_normal((joints, 3)) * 0.1
    step_p = rng.standard_normal((joints, 3))
    step_p *= 0.05 / np.linalg.norm(step_p, axis=1, keepdims=True)  # per-joint norm 0.05
    step_v = rng.standard_normal((joints, 3))
    step_v *= 0.02 / np.linalg.norm(step_v, axis=1, keepdims=True)

    positions = np.empty((6, joints, 3))
    velocities = np.empty((6, joints, 3))
    # clip A nodes 0..2; node 1 is the source with symmetric neighbor steps
    positions[0], positions[1], positions[2] = base_p - step_p, base_p, base_p + step_p
    velocities[0], velocities[1], velocities[2] = base_v - step_v, base_v, base_v + step_v
    tau_p = 1.3 * np.sqrt((step_p**2).sum())  # Frobenius step norm, both neighbors equal
    tau_v = 1.3 * np.sqrt((step_v**2).sum())

    # clip B nodes 3..5; node 4 is the candidate target
    offset_p = rng.standard_normal((joints, 3))
    offset_p /= np.linalg.norm(offset_p, axis=1, keepdims=True)
    offset_v = rng.standard_normal((joints, 3))
    offset_v /= np.linalg.norm(offset_v, axis=1, keepdims=True)
    scale_p = np.full(joints, 0.5 * tau_p)
    scale_v = np.full(joints, 0.5 * tau_v)
    for j in range(joints - passing_joints):
        scale_p[j] = 2.0 * tau_p  # joint j fails the positional test
    positions[4] = positions[1] + offset_p * scale_p[:, None]
    velocities[4] = velocities[1] + offset_v * scale_v[:, None]
    positions[3] = positions[4] - step_p
    positions[5] = positions[4] + step_p
    velocities[3] = velocities[4] - step_v
    velocities[5] = velocities[4] + step_v

    graph = graph_from_arrays(
        skeleton,
        rotations,
        continuous=[(0, 1), (1, 2), (3, 4), (4, 5)],
        transitions=[],
        clip_ids=["a"] * 3 + ["b"] * 3,
        frame_indices=[0, 1, 2, 0, 1, 2],
        positions=positions,
        velocities=velocities,
    )
    return graph


class TestTransitionEdges:
    def test_identical_nodes_always_connect(self):
        # clip B node 4 duplicates clip A node 1; thresholds positive
        skeleton = chain_skeleton(4)
        rng = np.random.default_rng(3)
        rotations = random_unit_quats(rng, (6, 4))
        positions = rng.standard_normal((6, 4, 3))
        velocities = rng.standard_normal((6, 4, 3)) * 0.1
        positions[4] = positions[1]
        velocities[4] = velocities[1]
        graph = graph_from_arrays(
            skeleton,
            rotations,
            continuous=[(0, 1), (1, 2), (3, 4), (4, 5)],
            transitions=[],
            clip_ids=["a"] * 3 + ["b"] * 3,
            frame_indices=[0, 1, 2, 0, 1, 2],
            positions=positions,
            velocities=velocities,
        )
        edges = gg.propose_transition_edges(graph)
        assert [1, 4] in edges.tolist()

    def test_consensus_19_of_20_admits_edge(self):
        edges = gg.propose_transition_edges(consensus_fixture(19), th=0.95)
        assert [1, 4] in edges.tolist()

    def test_consensus_18_of_20_rejects_edge(self):
        edges = gg.propose_transition_edges(consensus_fixture(18), th=0.95)
        assert [1, 4] not in edges.tolist()

    def test_time_shifted_copy_connects_corresponding_frames(self):
        # clip B repeats clip A five frames later; matching interior frames have
        # identical positions and velocities, so they must connect both ways
        frames, joints, shift = 30, 5, 5
        rot_a = sinusoid_rotations(frames, joints, period=frames, seed=8)
        rot_b = rot_a[shift : frames - shift]
        doc = doc_from_rotations({"a": rot_a, "b": rot_b})
        base = gg.build_nodes(doc)
        edges = gg.propose_transition_edges(base, 1.3, 1.3, 0.95)
        edge_set = {(int(s), int(d)) for s, d in edges}
        assert edge_set == brute_force_edges(base, 1.3, 1.3, 0.95)
        # clip B frame i is node 30+i and duplicates clip A frame shift+i; away
        # from clip B's ends (one-sided boundary velocities differ) the pair has
        # zero discrepancy and must connect in both directions
        b_len = rot_b.shape[0]
        for i in range(2, b_len - 2):
            assert (30 + i, shift + i) in edge_set
            assert (shift + i, 30 + i) in edge_set

    def test_lambda_monotonicity(self):
        doc = doc_from_rotations({"a": sinusoid_rotations(40, 4, period=38, seed=2)})
        base = gg.build_nodes(doc)
        tight = {(int(s), int(d)) for s, d in gg.propose_transition_edges(base, 1.0, 1.0)}
        loose = {(int(s), int(d)) for s, d in gg.propose_transition_edges(base, 1.3, 1.3)}
        assert tight <= loose

    def test_prefilter_and_workers_do_not_change_result(self):
        doc = doc_from_rotations({"a": sinusoid_rotations(60, 5, period=58, seed=5)})
        base = gg.build_nodes(doc)
        reference = gg.propose_transition_edges(base, prefilter=False, workers=1)
        for prefilter in (True, False):
            for workers in (1, 4):
                edges = gg.propose_transition_edges(base, prefilter=prefilter, workers=workers)
                assert np.array_equal(edges, reference)

    def test_never_adjacent_within_clip(self):
        doc = doc_from_rotations({"a": sinusoid_rotations(50, 4, period=48, seed=6)})
        base = gg.build_nodes(doc)
        edges = gg.propose_transition_edges(base)
        for s, d in edges:
            assert abs(int(s) - int(d)) > 1


def brute_force_edges(graph: gg.MotionGraph, lambda_p, lambda_v, th) -> set:
    """Direct per-joint evaluation of the dual-threshold criterion."""
    n = graph.node_count
    joints = graph.skeleton.joint_count
    tau_p, tau_v = gg.adaptive_thresholds(graph, lambda_p, lambda_v)
    out = set()
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            if graph.clip_ids[s] == graph.clip_ids[t] and abs(
                int(graph.frame_indices[s]) - int(graph.frame_indices[t])
            ) <= 1:
                continue
            passed = 0
            for j in range(joints):
                dp = np.linalg.norm(graph.positions[s, j] - graph.positions[t, j])
                dv = np.linalg.norm(graph.velocities[s, j] - graph.velocities[t, j])
                if dp <= tau_p[s] and dv <= tau_v[s]:
                    passed += 1
            if passed / joints >= th:
                out.add((s, t))
    return out


class TestSCC:
    def test_chain_has_trivial_components(self):
        assert gg.largest_scc(4, np.array([[0, 1], [1, 2], [2, 3]])) == [0]

    def test_cycle_is_one_component(self):
        assert gg.largest_scc(4, np.array([[0, 1], [1, 2], [2, 3], [3, 0]])) == [0, 1, 2, 3]

    def test_tie_breaks_to_smallest_index(self):
        # two 2-cycles: {0,1} and {2,3}; the first contains the smallest index
        edges = np.array([[0, 1], [1, 0], [2, 3], [3, 2]])
        assert gg.largest_scc(4, edges) == [0, 1]

    def test_random_digraphs_match_bfs_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(15):
            n = int(rng.integers(2, 60))
            count = int(rng.integers(1, 4 * n))
            edges = rng.integers(0, n, size=(count, 2))
            assert gg.largest_scc(n, edges) == bfs_largest_scc(n, edges)

    def test_wrap_cycle_clip_fully_retained(self, loop_graph):
        assert loop_graph.node_count == 90
        assert [89, 0] in loop_graph.transition_edges.tolist()

    def test_pure_chain_prunes_to_single_node_with_warning(self):
        doc = doc_from_rotations({"a": accelerating_rotations(12, 3)})
        base = gg.build_nodes(doc)
        transitions = gg.propose_transition_edges(base)
        assert transitions.shape[0] == 0
        with pytest.warns(UserWarning, match="single node"):
            pruned = gg.prune_to_largest_scc(base)
        assert pruned.node_count == 1

    def test_pruned_pairs_mutually_reachable(self, loop_graph):
        rng = np.random.default_rng(0)
        adjacency = loop_graph.out_edges()

        def reachable(a, b):
            seen = {a}
            stack = [a]
            while stack:
                u = stack.pop()
                if u == b:
                    return True
                for v, _ in adjacency[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            return a == b

        for _ in range(100):
            a, b = rng.integers(0, loop_graph.node_count, size=2)
            assert reachable(int(a), int(b))
            assert reachable(int(b), int(a))

    def test_prune_on_synthetic_motion_graphs_matches_oracle(self):
        rng = np.random.default_rng(77)
        skeleton = chain_skeleton(3)
        for _ in range(10):
            n = int(rng.integers(2, 80))
            rotations = random_unit_quats(rng, (n, 3))
            edge_count = int(rng.integers(1, 3 * n))
            raw = rng.integers(0, n, size=(edge_count, 2))
            raw = raw[raw[:, 0] != raw[:, 1]]
            raw = np.unique(raw, axis=0)
            graph = graph_from_arrays(
                skeleton,
                rotations,
                continuous=[],
                transitions=raw,
                clip_ids=[f"n{i}" for i in range(n)],
                frame_indices=[0] * n,
            )
            expected = bfs_largest_scc(n, raw)
            import warnings as warnings_module

            with warnings_module.catch_warnings():
                warnings_module.simplefilter("ignore")
                pruned = gg.prune_to_largest_scc(graph)
            retained = sorted(int(c[1:]) for c in pruned.clip_ids)
            assert retained == expected


def accelerating_rotations(frames: int, joints: int) -> np.ndarray:
    """Monotonically accelerating joint motion; no pair is ever within thresholds."""
    angles = 0.02 * (np.arange(frames) ** 2)
    rot = np.empty((frames, joints, 4))
    axis = np.array([0.0, 0.0, 1.0])
    for t in range(frames):
        for j in range(joints):
            rot[t, j] = gg.quat_from_axis_angle(axis * angles[t] * (1 + 0.1 * j))
    return rot


class TestBuildGraph:
    def test_loop_doc_end_to_end(self, loop_doc):
        graph = gg.build_graph(loop_doc)
        assert graph.node_count == 90
        assert graph.meta["params"]["lambda_p"] == 1.3
        assert graph.continuous_edges.shape[0] == 89

    def test_rebuild_positions_from_saved_graph(self, tmp_path, loop_graph):
        path = tmp_path / "graph.json"
        gg.save_graph(loop_graph, path)
        loaded = gg.load_graph(path)
        recomputed = gg.forward_kinematics(
            loaded.skeleton, loaded.rotations, loaded.root_translations
        )
        assert np.allclose(recomputed, loaded.positions, atol=1e-9)

    def test_transition_duplicating_continuous_rejected(self):
        skeleton = chain_skeleton(3)
        rotations = random_unit_quats(np.random.default_rng(0), (3, 3))
        with pytest.raises(gg.GraphError, match="adjacent"):
            graph_from_arrays(
                skeleton, rotations, continuous=[(0, 1), (1, 2)], transitions=[(0, 1)]
            )

    def test_self_edge_rejected(self):
        skeleton = chain_skeleton(3)
        rotations = random_unit_quats(np.random.default_rng(0), (3, 3))
        with pytest.raises(gg.GraphError, match="self-edge"):
            graph_from_arrays(
                skeleton, rotations, continuous=[(0, 1), (1, 2)], transitions=[(2, 2)]
            )
