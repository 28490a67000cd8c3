import numpy as np
import pytest

import gesturegraph as gg

from conftest import chain_skeleton, graph_from_arrays, random_unit_quats


def two_clip_graph(joints: int = 3) -> gg.MotionGraph:
    """Clips a (nodes 0..4) and b (nodes 5..9) joined by transitions 4->5 and 9->0."""
    skeleton = chain_skeleton(joints)
    rng = np.random.default_rng(21)
    rotations = random_unit_quats(rng, (10, joints))
    return graph_from_arrays(
        skeleton,
        rotations,
        continuous=[(i, i + 1) for i in range(4)] + [(i, i + 1) for i in range(5, 9)],
        transitions=[(4, 5), (9, 0)],
        clip_ids=["a"] * 5 + ["b"] * 5,
        frame_indices=[0, 1, 2, 3, 4, 0, 1, 2, 3, 4],
        root_translations=rng.standard_normal((10, 3)),
    )


def continuous_path(graph: gg.MotionGraph, nodes) -> gg.RetrievedPath:
    kinds = []
    cont = {(int(s), int(d)) for s, d in graph.continuous_edges}
    for a, b in zip(nodes, nodes[1:]):
        kinds.append("continuous" if (a, b) in cont else "transition")
    return gg.RetrievedPath(
        nodes=np.asarray(nodes, dtype=np.int64),
        edge_kinds=tuple(kinds),
        step_costs=np.zeros(len(nodes)),
        total_cost=0.0,
    )


class TestRenderPlan:
    def test_all_continuous_path_is_all_original(self, loop_graph):
        path = continuous_path(loop_graph, list(range(90)))
        plan = gg.path_to_render_plan(path, loop_graph)
        assert len(plan.entries) == 90
        assert all(e.kind == "original" for e in plan.entries)
        assert plan.duration == pytest.approx(3.0)

    def test_transitions_insert_two_entries_each(self):
        graph = two_clip_graph()
        path = continuous_path(graph, [2, 3, 4, 5, 6, 7, 8, 9, 0, 1])
        assert path.edge_kinds.count("transition") == 2
        plan = gg.path_to_render_plan(graph=graph, path=path, preserve_length=False)
        assert len(plan.entries) == 10 + 2 * 2
        interpolated = [e for e in plan.entries if e.kind == "interpolated"]
        assert len(interpolated) == 4

    def test_preserve_length_keeps_one_entry_per_frame(self):
        graph = two_clip_graph()
        path = continuous_path(graph, [2, 3, 4, 5, 6, 7])
        plan = gg.path_to_render_plan(path, graph, preserve_length=True)
        assert len(plan.entries) == 6
        assert [e.kind for e in plan.entries] == [
            "original", "original", "interpolated", "interpolated", "original", "original",
        ]

    def test_original_entries_reproduce_path(self):
        graph = two_clip_graph()
        nodes = [2, 3, 4, 5, 6, 7]
        plan = gg.path_to_render_plan(continuous_path(graph, nodes), graph, preserve_length=False)
        originals = [
            (e.clip_id, e.frame_index) for e in plan.entries if e.kind == "original"
        ]
        expected = [(graph.clip_ids[n], int(graph.frame_indices[n])) for n in nodes]
        assert originals == expected

    def test_interpolated_entries_cite_bracketing_frames(self):
        graph = two_clip_graph()
        plan = gg.path_to_render_plan(
            continuous_path(graph, [3, 4, 5, 6]), graph, preserve_length=False
        )
        interpolated = [e for e in plan.entries if e.kind == "interpolated"]
        assert interpolated[0].blend_prev == (("a", 3), ("a", 4))
        assert interpolated[0].blend_next == (("b", 0), ("b", 1))

    def test_audio_time_advances_per_entry(self):
        graph = two_clip_graph()
        plan = gg.path_to_render_plan(
            continuous_path(graph, [3, 4, 5, 6]), graph, preserve_length=False
        )
        times = [e.audio_time for e in plan.entries]
        assert times == pytest.approx([i / 30.0 for i in range(len(plan.entries))])

    def test_path_graph_mismatch_rejected(self):
        graph = two_clip_graph()
        bad = gg.RetrievedPath(
            nodes=np.array([0, 7]),
            edge_kinds=("continuous",),
            step_costs=np.zeros(2),
            total_cost=0.0,
        )
        with pytest.raises(gg.GraphError, match="does not exist"):
            gg.path_to_render_plan(bad, graph)


class TestSmoothTransitions:
    def test_zero_transition_path_copies_poses(self, loop_graph):
        nodes = list(range(20, 40))
        path = continuous_path(loop_graph, nodes)
        seq = gg.smooth_transitions(path, loop_graph)
        assert seq.frame_count == 20
        assert np.array_equal(seq.rotations, loop_graph.rotations[20:40])
        assert np.array_equal(seq.root_translations, loop_graph.root_translations[20:40])

    def test_identical_boundary_poses_interpolate_to_same(self):
        skeleton = chain_skeleton(3)
        rng = np.random.default_rng(2)
        pose = random_unit_quats(rng, (3,))
        rotations = np.concatenate(
            [random_unit_quats(rng, (4, 3)), random_unit_quats(rng, (4, 3))]
        )
        rotations[3] = pose
        rotations[4] = pose
        graph = graph_from_arrays(
            skeleton,
            rotations,
            continuous=[(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)],
            transitions=[(3, 4)],
            clip_ids=["a"] * 4 + ["b"] * 4,
            frame_indices=[0, 1, 2, 3, 0, 1, 2, 3],
        )
        path = continuous_path(graph, [2, 3, 4, 5])
        seq = gg.smooth_transitions(path, graph, preserve_length=False)
        assert seq.frame_count == 6
        assert np.allclose(seq.rotations[2], pose, atol=1e-12)
        assert np.allclose(seq.rotations[3], pose, atol=1e-12)

    def test_quarter_turn_transition_interpolates_thirds(self):
        # transition between identity and a 90 deg turn inserts 30 and 60 deg poses
        skeleton = chain_skeleton(2)
        identity = np.tile([1.0, 0.0, 0.0, 0.0], (2, 1))
        turned = np.array(identity)
        turned[1] = gg.quat_from_axis_angle([0.0, 0.0, np.pi / 2])
        rotations = np.stack([identity, identity, turned, turned])
        graph = graph_from_arrays(
            skeleton,
            rotations,
            continuous=[(0, 1), (2, 3)],
            transitions=[(1, 2)],
            clip_ids=["a", "a", "b", "b"],
            frame_indices=[0, 1, 0, 1],
        )
        path = continuous_path(graph, [0, 1, 2, 3])
        seq = gg.smooth_transitions(path, graph, preserve_length=False)
        assert seq.frame_count == 6
        expected_30 = gg.quat_from_axis_angle([0.0, 0.0, np.pi / 6])
        expected_60 = gg.quat_from_axis_angle([0.0, 0.0, np.pi / 3])
        assert np.allclose(seq.rotations[2, 1], expected_30, atol=1e-12)
        assert np.allclose(seq.rotations[3, 1], expected_60, atol=1e-12)

    def test_preserve_length_replaces_adjacent_frames(self):
        graph = two_clip_graph()
        nodes = [2, 3, 4, 5, 6, 7]
        path = continuous_path(graph, nodes)
        seq = gg.smooth_transitions(path, graph, preserve_length=True)
        assert seq.frame_count == len(nodes)
        # frames away from the transition are untouched
        assert np.array_equal(seq.rotations[0], graph.rotations[2])
        assert np.array_equal(seq.rotations[-1], graph.rotations[7])
        # the two frames at the cut are replaced by interpolants
        blend_1 = gg.slerp(graph.rotations[4], graph.rotations[5], 1.0 / 3.0)
        blend_2 = gg.slerp(graph.rotations[4], graph.rotations[5], 2.0 / 3.0)
        assert np.allclose(seq.rotations[2], blend_1, atol=1e-12)
        assert np.allclose(seq.rotations[3], blend_2, atol=1e-12)

    def test_root_translation_lerped(self):
        graph = two_clip_graph()
        path = continuous_path(graph, [3, 4, 5, 6])
        seq = gg.smooth_transitions(path, graph, preserve_length=False)
        t_a, t_b = graph.root_translations[4], graph.root_translations[5]
        assert np.allclose(seq.root_translations[2], t_a + (t_b - t_a) / 3.0, atol=1e-12)
        assert np.allclose(seq.root_translations[3], t_a + (t_b - t_a) * 2.0 / 3.0, atol=1e-12)

    def test_duration_tracks_plan_length(self):
        graph = two_clip_graph()
        path = continuous_path(graph, [2, 3, 4, 5, 6])
        plan = gg.path_to_render_plan(path, graph, preserve_length=False)
        seq = gg.smooth_transitions(path, graph, preserve_length=False)
        assert seq.duration == pytest.approx(plan.duration)
        assert seq.frame_count == len(plan.entries)

    def test_max_jump_bounded_after_smoothing(self, loop_graph):
        # a wrapped walk crosses the transition edge; smoothing may not create
        # jumps beyond the continuous segments' own maximum step
        nodes = list(range(60, 90)) + list(range(0, 30))
        path = continuous_path(loop_graph, nodes)
        seq = gg.smooth_transitions(path, loop_graph, preserve_length=False)
        jumps = gg.quat_angular_distance(seq.rotations[1:], seq.rotations[:-1]).max(axis=1)
        cont = gg.quat_angular_distance(
            loop_graph.rotations[1:], loop_graph.rotations[:-1]
        ).max(axis=1)
        assert jumps.max() <= cont.max() * 1.5 + 1e-9
