"""Motion-graph gesture synthesis toolkit.

Builds motion graphs from skeletal gesture clips, retrieves the graph walk
closest to a query motion with a hybrid rotation/position metric and pruned
beam search, samples query motions with a pluggable-denoiser DDIM sampler,
stitches retrieved walks into continuous tracks with render plans, and
evaluates beat consistency and diversity.
"""

from .config import PipelineConfig, resolve_config
from .diffusion import (
    ConditioningSet,
    LinearDenoiser,
    NoiseSchedule,
    TargetDenoiser,
    align_token_features,
    ddim_sample,
    forward_noising,
    fuse_features,
    inpaint_long_sequence,
    noise_prediction_loss,
    sample_windows,
)
from .errors import (
    ConfigError,
    DocumentError,
    GestureGraphError,
    GraphError,
    SamplingError,
    SearchError,
)
from .graph import (
    GraphNode,
    MotionGraph,
    adaptive_thresholds,
    build_graph,
    build_nodes,
    largest_scc,
    propose_transition_edges,
    prune_to_largest_scc,
)
from .kinematics import (
    Pose,
    Skeleton,
    central_difference_velocities,
    forward_kinematics,
    quat_angular_distance,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_to_axis_angle,
    slerp,
)
from .metrics import BeatTrack, beat_consistency, diversity, kinematic_beats, load_beats
from .motion_io import (
    Clip,
    FeatureDocument,
    MotionDocument,
    MotionSequence,
    load_features,
    load_graph,
    load_motion,
    load_path,
    load_plan,
    load_skeleton,
    save_features,
    save_graph,
    save_motion,
    save_path,
    save_plan,
    save_skeleton,
)
from .retrieval import MetricWeights, RetrievedPath, beam_search, hybrid_distance
from .stitch import PlanEntry, RenderPlan, path_to_render_plan, smooth_transitions

__version__ = "0.1.0"

__all__ = [
    "BeatTrack",
    "Clip",
    "ConditioningSet",
    "ConfigError",
    "DocumentError",
    "FeatureDocument",
    "GestureGraphError",
    "GraphError",
    "GraphNode",
    "LinearDenoiser",
    "MetricWeights",
    "MotionDocument",
    "MotionGraph",
    "MotionSequence",
    "NoiseSchedule",
    "PipelineConfig",
    "PlanEntry",
    "Pose",
    "RenderPlan",
    "RetrievedPath",
    "SamplingError",
    "SearchError",
    "Skeleton",
    "TargetDenoiser",
    "adaptive_thresholds",
    "align_token_features",
    "beam_search",
    "beat_consistency",
    "build_graph",
    "build_nodes",
    "central_difference_velocities",
    "ddim_sample",
    "diversity",
    "forward_kinematics",
    "forward_noising",
    "fuse_features",
    "hybrid_distance",
    "inpaint_long_sequence",
    "kinematic_beats",
    "largest_scc",
    "load_beats",
    "load_features",
    "load_graph",
    "load_motion",
    "load_path",
    "load_plan",
    "load_skeleton",
    "noise_prediction_loss",
    "path_to_render_plan",
    "propose_transition_edges",
    "prune_to_largest_scc",
    "quat_angular_distance",
    "quat_from_axis_angle",
    "quat_mul",
    "quat_normalize",
    "quat_rotate",
    "quat_to_axis_angle",
    "resolve_config",
    "sample_windows",
    "save_features",
    "save_graph",
    "save_motion",
    "save_path",
    "save_plan",
    "save_skeleton",
    "slerp",
    "smooth_transitions",
]
