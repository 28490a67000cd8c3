import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from smplx_convert import (
    ConversionError,
    axis_angle_to_quat,
    convert_archive,
    load_skeleton_definition,
)
from smplx_convert.cli import bundled_skeleton_path, main

runner = CliRunner()

JOINTS = 22


def rodrigues_matrix(rotvec: np.ndarray) -> np.ndarray:
    """Independent axis-angle to rotation matrix (Rodrigues formula)."""
    angle = float(np.linalg.norm(rotvec))
    if angle < 1e-12:
        return np.eye(3)
    axis = rotvec / angle
    k = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def quat_matrix(q: np.ndarray) -> np.ndarray:
    """Independent scalar-first quaternion to rotation matrix."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def write_archive(path: Path, frames: int = 90, seed: int = 0, **extra) -> np.ndarray:
    rng = np.random.default_rng(seed)
    poses = rng.uniform(-1.0, 1.0, (frames, JOINTS, 3))
    arrays = {"poses": poses, "trans": rng.standard_normal((frames, 3)) * 0.1}
    arrays.update(extra)
    np.savez(path, **arrays)
    return poses


def convert_cli(*args):
    return runner.invoke(main, [str(a) for a in args])


class TestRotationConversion:
    def test_round_trip_matrix_distance_under_1e6(self, tmp_path):
        rng = np.random.default_rng(7)
        count = 1000
        rotvecs = rng.standard_normal((count, 3))
        rotvecs *= (rng.uniform(0.0, np.pi - 1e-3, count) / np.linalg.norm(rotvecs, axis=1))[:, None]
        # one frame per rotation, joint 0 carries it
        poses = np.zeros((count, JOINTS, 3))
        poses[:, 0] = rotvecs
        np.savez(tmp_path / "a.npz", poses=poses, trans=np.zeros((count, 3)))
        result = convert_cli(
            "--in", tmp_path / "a.npz", "--out", tmp_path / "m.json"
        )
        assert result.exit_code == 0, result.output
        doc = json.loads((tmp_path / "m.json").read_text())
        quats = np.asarray(doc["clips"][0]["rotations"])[:, 0]
        worst = 0.0
        for rotvec, quat in zip(rotvecs, quats):
            distance = np.linalg.norm(rodrigues_matrix(rotvec) - quat_matrix(quat))
            worst = max(worst, distance)
        assert worst < 1e-6, worst

    def test_zero_axis_angle_gives_identity_quaternion(self):
        quat = axis_angle_to_quat(np.zeros(3))
        assert np.allclose(quat, [1.0, 0.0, 0.0, 0.0], atol=0.0)

    def test_quaternions_unit_norm(self):
        rng = np.random.default_rng(3)
        quats = axis_angle_to_quat(rng.standard_normal((500, 3)))
        assert np.allclose(np.linalg.norm(quats, axis=-1), 1.0, atol=1e-12)


class TestArchiveConversion:
    def test_single_clip_counts(self, tmp_path):
        write_archive(tmp_path / "a.npz", frames=90)
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        result = convert_archive(tmp_path / "a.npz", skeleton)
        assert len(result.motion["clips"]) == 1
        clip = result.motion["clips"][0]
        assert len(clip["rotations"]) == 90
        assert len(clip["rotations"][0]) == JOINTS
        assert result.motion["fps"] == 30.0

    def test_flat_pose_matrix_accepted(self, tmp_path):
        rng = np.random.default_rng(1)
        np.savez(
            tmp_path / "a.npz",
            poses=rng.uniform(-1, 1, (10, 3 * JOINTS)),
            trans=np.zeros((10, 3)),
        )
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        result = convert_archive(tmp_path / "a.npz", skeleton)
        assert len(result.motion["clips"][0]["rotations"]) == 10

    def test_metadata_carried(self, tmp_path):
        write_archive(
            tmp_path / "a.npz", frames=12, betas=np.arange(10.0), focal=np.array(1.25)
        )
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        clip = convert_archive(tmp_path / "a.npz", skeleton).motion["clips"][0]
        assert clip["metadata"]["shape_params"] == list(np.arange(10.0))
        assert clip["metadata"]["focal_length"] == 1.25

    def test_nan_frames_dropped_with_report(self, tmp_path):
        rng = np.random.default_rng(2)
        poses = rng.uniform(-1, 1, (20, JOINTS, 3))
        poses[[3, 11], 0, 0] = np.nan
        np.savez(tmp_path / "a.npz", poses=poses, trans=np.zeros((20, 3)))
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        result = convert_archive(tmp_path / "a.npz", skeleton)
        assert len(result.motion["clips"][0]["rotations"]) == 18
        assert result.reports[0].dropped_nan == 2

    def test_resampling_to_30fps_nearest_frame(self, tmp_path):
        write_archive(tmp_path / "a.npz", frames=120, fps=np.array(60.0))
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        result = convert_archive(tmp_path / "a.npz", skeleton)
        clip = result.motion["clips"][0]
        assert len(clip["rotations"]) == 60
        assert result.reports[0].resampled_from == 60.0
        # target frame k reads source frame 2k
        with np.load(tmp_path / "a.npz") as archive:
            source = axis_angle_to_quat(archive["poses"])
        out = np.asarray(clip["rotations"])
        assert np.allclose(out[5], source[10], atol=1e-12)

    def test_multi_clip_grouping(self, tmp_path):
        rng = np.random.default_rng(4)
        np.savez(
            tmp_path / "a.npz",
            **{
                "ep1/poses": rng.uniform(-1, 1, (8, JOINTS, 3)),
                "ep1/trans": np.zeros((8, 3)),
                "ep2/poses": rng.uniform(-1, 1, (5, JOINTS, 3)),
                "ep2/trans": np.zeros((5, 3)),
            },
        )
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        result = convert_archive(tmp_path / "a.npz", skeleton)
        assert [c["clip_id"] for c in result.motion["clips"]] == ["ep1", "ep2"]

    def test_missing_arrays_rejected(self, tmp_path):
        np.savez(tmp_path / "a.npz", poses=np.zeros((5, JOINTS, 3)))
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        with pytest.raises(ConversionError, match="trans"):
            convert_archive(tmp_path / "a.npz", skeleton)

    def test_wrong_joint_count_rejected(self, tmp_path):
        np.savez(tmp_path / "a.npz", poses=np.zeros((5, 7, 3)), trans=np.zeros((5, 3)))
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        with pytest.raises(ConversionError, match="poses"):
            convert_archive(tmp_path / "a.npz", skeleton)

    def test_feature_arrays_collected(self, tmp_path):
        rng = np.random.default_rng(5)
        write_archive(
            tmp_path / "a.npz",
            frames=6,
            mel=rng.standard_normal((6, 8)),
            llm_tokens=rng.standard_normal((2, 4)),
            token_times=np.array([0.0, 0.1]),
        )
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        features = convert_archive(tmp_path / "a.npz", skeleton).features
        assert features is not None
        assert features["frame_count"] == 6
        assert len(features["llm_tokens"]) == 2


class TestCli:
    def test_idempotent_reexport(self, tmp_path):
        write_archive(tmp_path / "a.npz", frames=30)
        assert convert_cli("--in", tmp_path / "a.npz", "--out", tmp_path / "m1.json").exit_code == 0
        assert convert_cli("--in", tmp_path / "m1.json", "--out", tmp_path / "m2.json").exit_code == 0
        assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()

    def test_features_out(self, tmp_path):
        rng = np.random.default_rng(6)
        write_archive(tmp_path / "a.npz", frames=6, mel=rng.standard_normal((6, 8)))
        result = convert_cli(
            "--in", tmp_path / "a.npz",
            "--out", tmp_path / "m.json",
            "--features-out", tmp_path / "f.json",
        )
        assert result.exit_code == 0, result.output
        features = json.loads((tmp_path / "f.json").read_text())
        assert features["kind"] == "features"

    def test_features_out_without_features_fails(self, tmp_path):
        write_archive(tmp_path / "a.npz", frames=6)
        result = convert_cli(
            "--in", tmp_path / "a.npz",
            "--out", tmp_path / "m.json",
            "--features-out", tmp_path / "f.json",
        )
        assert result.exit_code == 1
        assert "error" in result.stderr

    def test_explicit_skeleton_file(self, tmp_path):
        write_archive(tmp_path / "a.npz", frames=6)
        result = convert_cli(
            "--in", tmp_path / "a.npz",
            "--skeleton", bundled_skeleton_path(),
            "--out", tmp_path / "m.json",
        )
        assert result.exit_code == 0

    def test_missing_input_usage_error(self):
        assert convert_cli("--out", "x.json").exit_code == 2


class TestBundledSkeleton:
    def test_loads_and_is_consistent(self):
        skeleton = load_skeleton_definition(bundled_skeleton_path())
        parents = skeleton["parents"]
        assert len(parents) == JOINTS
        assert parents[0] == -1
        assert all(0 <= parents[j] < j for j in range(1, JOINTS))
        assert skeleton["upper_body"]
        assert 0 not in skeleton["upper_body"]
        assert len(skeleton["rest_offsets"]) == JOINTS


class TestPrimaryInterop:
    def test_converted_document_loads_in_primary_package(self, tmp_path):
        gg = pytest.importorskip("gesturegraph")
        write_archive(tmp_path / "a.npz", frames=12, focal=np.array(1.1))
        assert convert_cli("--in", tmp_path / "a.npz", "--out", tmp_path / "m.json").exit_code == 0
        doc = gg.load_motion(tmp_path / "m.json")
        assert doc.clips[0].motion.frame_count == 12
        assert doc.skeleton.joint_count == JOINTS
        base = gg.build_nodes(doc)
        assert base.node_count == 12

    def test_primary_reexport_matches_converter_output(self, tmp_path):
        # the primary's canonical save must reproduce the converter's bytes
        gg = pytest.importorskip("gesturegraph")
        write_archive(tmp_path / "a.npz", frames=9)
        convert_cli("--in", tmp_path / "a.npz", "--out", tmp_path / "m.json")
        doc = gg.load_motion(tmp_path / "m.json")
        gg.save_motion(doc, tmp_path / "resaved.json")
        assert (tmp_path / "m.json").read_bytes() == (tmp_path / "resaved.json").read_bytes()
