"""Pipeline configuration: one flat key-value namespace shared by CLI and service.

Config files are plain text, one ``key = value`` per line with ``#`` comments.
Command-line flags override file values, which override the built-in defaults
listed in ``KEY_DOCS``. Unknown keys and out-of-range values are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class PipelineConfig:
    lambda_p: float = 1.3
    lambda_v: float = 1.3
    th: float = 0.95
    beam_width: int = 200
    gamma: float = 1.5
    beta: float = 0.1
    lambda_r: float = 1.0
    lambda_p_metric: float = 1.0
    fps: float = 30.0
    clip_len: int = 90
    overlap: int = 6
    seed: int = 0
    sigma: float = 0.1
    prominence: float = 0.05
    sample_steps: int = 50
    workers: int = 1
    prefilter: bool = True
    preserve_length: bool = True
    absolute_positions: bool = False
    normalize_positions: bool = False
    keep_all_sccs: bool = False

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.lambda_p >= 0, "lambda_p must be >= 0"),
            (self.lambda_v >= 0, "lambda_v must be >= 0"),
            (0 < self.th <= 1, "th must lie in (0, 1]"),
            (self.beam_width >= 1, "beam_width must be >= 1"),
            (self.gamma >= 0 or math.isinf(self.gamma), "gamma must be >= 0"),
            (self.beta >= 0, "beta must be >= 0"),
            (self.lambda_r >= 0, "lambda_r must be >= 0"),
            (self.lambda_p_metric >= 0, "lambda_p_metric must be >= 0"),
            (self.lambda_r > 0 or self.lambda_p_metric > 0, "lambda_r and lambda_p_metric cannot both be 0"),
            (self.fps > 0, "fps must be positive"),
            (self.clip_len >= 2, "clip_len must be >= 2"),
            (0 < self.overlap < self.clip_len, "overlap must lie strictly between 0 and clip_len"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.sigma > 0, "sigma must be positive"),
            (self.prominence >= 0, "prominence must be >= 0"),
            (self.sample_steps >= 1, "sample_steps must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


KEY_DOCS: dict[str, str] = {
    "lambda_p": "positional threshold scale for transition edges (default 1.3)",
    "lambda_v": "velocity threshold scale for transition edges (default 1.3)",
    "th": "fraction of joints that must pass both thresholds (default 0.95)",
    "beam_width": "beam width K kept per retrieval step (default 200)",
    "gamma": "retrieval pruning slack, grows linearly with progress (default 1.5, 'inf' disables)",
    "beta": "retrieval penalty added per transition edge (default 0.1)",
    "lambda_r": "retrieval weight of the rotational distance (default 1.0)",
    "lambda_p_metric": "retrieval weight of the positional distance (default 1.0)",
    "fps": "frames per second of all motion data (default 30)",
    "clip_len": "sampling window length in frames (default 90)",
    "overlap": "sampling window overlap in frames (default 6)",
    "seed": "random seed for sampling (default 0)",
    "sigma": "beat-consistency kernel width in seconds (default 0.1)",
    "prominence": "minimum kinematic-beat prominence in m/s (default 0.05)",
    "sample_steps": "denoising steps used at inference (default 50)",
    "workers": "worker threads for graph building (default 1)",
    "prefilter": "use the exact candidate prefilter during graph builds (default true)",
    "preserve_length": "replace instead of insert frames at stitched transitions (default true)",
    "absolute_positions": "compare world-space instead of root-relative positions (default false)",
    "normalize_positions": "divide positional distance by mean upper-body bone length (default false)",
    "keep_all_sccs": "skip pruning the graph to its largest SCC (default false)",
}


def _parse_value(key: str, text: str, target_type: type) -> object:
    text = text.strip()
    if target_type is bool:
        lowered = text.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    try:
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected {target_type.__name__}, got {text!r}") from exc
    return text


def load_config_file(path: str | Path) -> dict[str, object]:
    """Parse ``key = value`` lines into typed values, rejecting unknown keys."""
    types = {f.name: f.type for f in fields(PipelineConfig)}
    concrete = {"float": float, "int": int, "bool": bool}
    values: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, raw = text.partition("=")
        key = key.strip()
        if key not in types:
            raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
        target = concrete.get(str(types[key]), float)
        values[key] = _parse_value(key, raw, target)
    return values


def resolve_config(config_path: str | Path | None = None, **overrides: object) -> PipelineConfig:
    """Defaults, then config-file values, then explicit non-None overrides."""
    config = PipelineConfig()
    if config_path is not None:
        for key, value in load_config_file(config_path).items():
            setattr(config, key, value)
    for key, value in overrides.items():
        if value is None:
            continue
        if not hasattr(config, key):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(config, key, value)
    return config.validate()
