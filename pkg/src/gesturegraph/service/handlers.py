"""Service operations behind the HTTP endpoints.

Each handler is a plain function from a request model to a response model, so
the CLI can call them in-process and the FastAPI app can expose them over
HTTP without duplicating logic. File paths in requests are resolved on the
host running the handler.
"""

from __future__ import annotations

import glob
import warnings

import numpy as np

from .. import graph as graph_mod
from .. import metrics as metrics_mod
from .. import motion_io
from ..diffusion import (
    DEFAULT_SAMPLE_STEPS,
    ConditioningSet,
    align_token_features,
    fuse_features,
    inpaint_long_sequence,
    load_denoiser,
    load_schedule,
    segment_conditioning,
)
from ..errors import DocumentError, SamplingError
from ..motion_io import Clip, MotionDocument, MotionSequence
from ..retrieval import MetricWeights, beam_search
from ..stitch import path_to_render_plan, smooth_transitions
from . import schemas


def _collect_warnings(caught) -> list[str]:
    return [str(w.message) for w in caught]


def build_graph(req: schemas.BuildGraphRequest) -> schemas.BuildGraphResponse:
    doc = motion_io.load_motion(req.motion_path)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        graph = graph_mod.build_graph(
            doc,
            lambda_p=req.lambda_p,
            lambda_v=req.lambda_v,
            th=req.th,
            prefilter=req.prefilter,
            keep_all_sccs=req.keep_all_sccs,
            workers=req.workers,
        )
        motion_io.save_graph(graph, req.out_path)
    return schemas.BuildGraphResponse(
        out_path=req.out_path,
        nodes=graph.node_count,
        continuous_edges=int(graph.continuous_edges.shape[0]),
        transition_edges=int(graph.transition_edges.shape[0]),
        scc_size=graph.node_count,
        params=dict(graph.meta.get("params", {})),
        warnings=_collect_warnings(caught),
    )


def inspect(req: schemas.InspectRequest) -> schemas.InspectResponse:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        graph = motion_io.load_graph(req.graph_path)
    edge_total = int(graph.continuous_edges.shape[0] + graph.transition_edges.shape[0])
    scc = graph_mod.largest_scc(graph.node_count, graph.all_edges()) if graph.node_count else []
    degenerate = len(scc) <= 1
    messages = _collect_warnings(caught)
    if degenerate:
        messages.append("largest strongly connected component has at most one node")
    return schemas.InspectResponse(
        nodes=graph.node_count,
        clips=len(set(graph.clip_ids)),
        continuous_edges=int(graph.continuous_edges.shape[0]),
        transition_edges=int(graph.transition_edges.shape[0]),
        transition_fraction=(
            int(graph.transition_edges.shape[0]) / edge_total if edge_total else 0.0
        ),
        scc_size=len(scc),
        degenerate=degenerate,
        fps=graph.fps,
        joint_count=graph.skeleton.joint_count,
        warnings=messages,
    )


def _single_motion(doc: MotionDocument, context: str) -> tuple[MotionSequence, list[str]]:
    if not doc.clips:
        raise DocumentError(f"{context}: document has no clips")
    messages = []
    if len(doc.clips) > 1:
        messages.append(
            f"{context}: document has {len(doc.clips)} clips; using the first "
            f"('{doc.clips[0].clip_id}')"
        )
    return doc.clips[0].motion, messages


def retrieve(req: schemas.RetrieveRequest) -> schemas.RetrieveResponse:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        graph = motion_io.load_graph(req.graph_path)
        query_doc = motion_io.load_motion(req.query_path)
    query, messages = _single_motion(query_doc, req.query_path)
    weights = MetricWeights(
        lambda_r=req.lambda_r,
        lambda_p=req.lambda_p,
        absolute_positions=req.absolute_positions,
        normalize_positions=req.normalize_positions,
    )
    path = beam_search(
        graph, query, weights, beam_width=req.beam, gamma=req.gamma, beta=req.beta
    )
    motion_io.save_path(path, graph, req.out_path)
    return schemas.RetrieveResponse(
        out_path=req.out_path,
        total_cost=path.total_cost,
        frames=path.length,
        transitions=path.transition_count,
        warnings=_collect_warnings(caught) + messages,
    )


def sample(req: schemas.SampleRequest) -> schemas.SampleResponse:
    features = motion_io.load_features(req.features_path)
    schedule, file_steps = load_schedule(req.schedule_path)
    loaded = load_denoiser(req.denoiser_path, schedule)
    if req.skeleton_path is not None:
        skeleton = motion_io.load_skeleton(req.skeleton_path)
    elif loaded.skeleton is not None:
        skeleton = loaded.skeleton
    else:
        raise SamplingError(
            "no skeleton available: pass --skeleton or use a denoiser model that embeds one"
        )
    if loaded.motion_dim != 4 * skeleton.joint_count:
        raise SamplingError(
            f"denoiser motion width {loaded.motion_dim} does not match skeleton "
            f"({skeleton.joint_count} joints, width {4 * skeleton.joint_count})"
        )
    streams: dict[str, np.ndarray] = {}
    if features.mel is not None:
        streams["mel"] = features.mel
    if features.hubert is not None:
        streams["hubert"] = features.hubert
    if features.llm_tokens is not None:
        streams["llm"] = align_token_features(
            features.llm_tokens,
            features.frame_count,
            token_times=features.token_times,
            fps=features.fps,
        )
    usable = {name: mat for name, mat in streams.items() if name in loaded.projections}
    if not usable:
        raise SamplingError(
            "no usable conditioning stream: feature document offers "
            f"{sorted(streams) or 'none'}, model projects {sorted(loaded.projections) or 'none'}"
        )
    cond = ConditioningSet(
        mel=usable.get("mel"),
        hubert=usable.get("hubert"),
        llm=usable.get("llm"),
        w_mel=loaded.projections.get("mel") if "mel" in usable else None,
        w_hubert=loaded.projections.get("hubert") if "hubert" in usable else None,
        w_llm=loaded.projections.get("llm") if "llm" in usable else None,
    )
    fused = fuse_features(cond)
    windows, padded_total = segment_conditioning(fused, req.clip_len, req.overlap)
    if req.sample_steps is not None:
        steps = req.sample_steps
    elif file_steps is not None:
        steps = file_steps
    else:
        steps = min(DEFAULT_SAMPLE_STEPS, schedule.step_count)
    sequence = inpaint_long_sequence(
        loaded.denoiser,
        schedule,
        windows,
        padded_total,
        joint_count=skeleton.joint_count,
        seed=req.seed,
        fps=features.fps,
        clip_len=req.clip_len,
        overlap=req.overlap,
        step_count=steps,
    )
    trimmed = MotionSequence(
        sequence.rotations[: features.frame_count],
        sequence.root_translations[: features.frame_count],
        fps=features.fps,
    )
    doc = MotionDocument(
        skeleton=skeleton,
        clips=(Clip("generated", trimmed, metadata={"seed": req.seed}),),
        fps=features.fps,
    )
    motion_io.save_motion(doc, req.out_path)
    return schemas.SampleResponse(
        out_path=req.out_path,
        frames=trimmed.frame_count,
        windows=len(windows),
        seed=req.seed,
    )


def stitch(req: schemas.StitchRequest) -> schemas.StitchResponse:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        graph = motion_io.load_graph(req.graph_path)
        path = motion_io.load_path(req.path_path)
    motion = smooth_transitions(path, graph, preserve_length=req.preserve_length)
    plan = path_to_render_plan(path, graph, preserve_length=req.preserve_length)
    doc = MotionDocument(
        skeleton=graph.skeleton,
        clips=(Clip("stitched", motion),),
        fps=graph.fps,
    )
    motion_io.save_motion(doc, req.out_motion)
    motion_io.save_plan(plan, req.out_plan)
    return schemas.StitchResponse(
        out_motion=req.out_motion,
        out_plan=req.out_plan,
        frames=motion.frame_count,
        plan_entries=len(plan.entries),
        interpolated_entries=sum(1 for e in plan.entries if e.kind == "interpolated"),
        duration=plan.duration,
        warnings=_collect_warnings(caught),
    )


def metrics(req: schemas.MetricsRequest) -> schemas.MetricsResponse:
    doc = motion_io.load_motion(req.motion_path)
    motion, messages = _single_motion(doc, req.motion_path)
    skeleton = doc.skeleton
    beats = metrics_mod.kinematic_beats(motion, skeleton, prominence=req.prominence)
    report: dict = {
        "format_version": motion_io.FORMAT_VERSION,
        "kind": "metrics_report",
        "kinematic_beats": [float(b) for b in beats],
        "sigma": req.sigma,
        "prominence": req.prominence,
    }
    bc = None
    if req.beats_path is not None:
        audio = metrics_mod.load_beats(req.beats_path)
        bc = metrics_mod.beat_consistency(
            motion, skeleton, audio, sigma=req.sigma, prominence=req.prominence
        )
        report["beat_consistency"] = bc
    div = None
    div_count = None
    if req.diversity_set is not None:
        paths = sorted(glob.glob(req.diversity_set))
        if not paths:
            raise DocumentError(f"diversity set matched no files: {req.diversity_set}")
        motions = []
        for file_path in paths:
            other = motion_io.load_motion(file_path)
            motions.extend(clip.motion for clip in other.clips)
        div = metrics_mod.diversity(motions, skeleton)
        div_count = len(motions)
        report["diversity"] = div
        report["diversity_motion_count"] = div_count
    motion_io.write_canonical(report, req.out_path)
    return schemas.MetricsResponse(
        out_path=req.out_path,
        kinematic_beats=[float(b) for b in beats],
        beat_consistency=bc,
        diversity=div,
        diversity_motion_count=div_count,
        warnings=messages,
    )
