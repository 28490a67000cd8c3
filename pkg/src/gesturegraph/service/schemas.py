"""Pydantic request/response models for the pipeline service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class BuildGraphRequest(BaseModel):
    motion_path: str
    out_path: str
    lambda_p: float = Field(default=1.3, ge=0)
    lambda_v: float = Field(default=1.3, ge=0)
    th: float = Field(default=0.95, gt=0, le=1)
    prefilter: bool = True
    keep_all_sccs: bool = False
    workers: int = Field(default=1, ge=1)


class BuildGraphResponse(BaseModel):
    out_path: str
    nodes: int
    continuous_edges: int
    transition_edges: int
    scc_size: int
    params: dict[str, float | bool]
    warnings: list[str] = []


class InspectRequest(BaseModel):
    graph_path: str


class InspectResponse(BaseModel):
    nodes: int
    clips: int
    continuous_edges: int
    transition_edges: int
    transition_fraction: float
    scc_size: int
    degenerate: bool
    fps: float
    joint_count: int
    warnings: list[str] = []


class RetrieveRequest(BaseModel):
    graph_path: str
    query_path: str
    out_path: str
    beam: int = Field(default=200, ge=1)
    gamma: float = 1.5
    beta: float = Field(default=0.1, ge=0)
    lambda_r: float = Field(default=1.0, ge=0)
    lambda_p: float = Field(default=1.0, ge=0)
    absolute_positions: bool = False
    normalize_positions: bool = False


class RetrieveResponse(BaseModel):
    out_path: str
    total_cost: float
    frames: int
    transitions: int
    warnings: list[str] = []


class SampleRequest(BaseModel):
    features_path: str
    denoiser_path: str
    out_path: str
    skeleton_path: str | None = None
    schedule_path: str | None = None
    seed: int = Field(default=0, ge=0)
    sample_steps: int | None = Field(default=None, ge=1)
    clip_len: int = Field(default=90, ge=2)
    overlap: int = Field(default=6, ge=1)


class SampleResponse(BaseModel):
    out_path: str
    frames: int
    windows: int
    seed: int
    warnings: list[str] = []


class StitchRequest(BaseModel):
    graph_path: str
    path_path: str
    out_motion: str
    out_plan: str
    preserve_length: bool = True


class StitchResponse(BaseModel):
    out_motion: str
    out_plan: str
    frames: int
    plan_entries: int
    interpolated_entries: int
    duration: float
    warnings: list[str] = []


class MetricsRequest(BaseModel):
    motion_path: str
    out_path: str
    beats_path: str | None = None
    sigma: float = Field(default=0.1, gt=0)
    prominence: float = Field(default=0.05, ge=0)
    diversity_set: str | None = None


class MetricsResponse(BaseModel):
    out_path: str
    kinematic_beats: list[float]
    beat_consistency: float | None = None
    diversity: float | None = None
    diversity_motion_count: int | None = None
    warnings: list[str] = []


class ErrorResponse(BaseModel):
    error: str
    detail: str
