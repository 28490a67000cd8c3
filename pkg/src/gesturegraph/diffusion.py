"""Deterministic DDIM motion sampling with pluggable denoisers.

The motion tensor is (T, 4J): per-frame joint quaternions flattened in joint
order. The denoiser is any callable ``(x_k, step, conditioning) -> eps_hat``;
this module supplies the forward-noising closed form, conditioning alignment
and fusion, a Monte-Carlo noise-prediction loss, the deterministic DDIM
update, and overlapping inpainting for long sequences.

Forward noising uses the closed form x_k = sqrt(abar_k) x0 + sqrt(1-abar_k) eps,
which follows from composing the per-step Gaussian corruption with the
cumulative products abar_k = prod(alpha_1..alpha_k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Protocol

import numpy as np

from .errors import DocumentError, SamplingError
from .motion_io import (
    FORMAT_VERSION,
    MotionSequence,
    read_json,
    skeleton_from_dict,
    skeleton_to_dict,
    write_canonical,
)
from .kinematics import Skeleton, quat_normalize, slerp

Array = np.ndarray

DEFAULT_STEPS = 1000
DEFAULT_SAMPLE_STEPS = 50
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 2e-2
CLIP_FRAMES = 90
OVERLAP_FRAMES = 6


class Denoiser(Protocol):
    def __call__(self, x: Array, step: int, conditioning: Array) -> Array: ...


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Per-step retention factors alpha_k in (0, 1], k = 1..K.

    The cumulative products abar_k must be strictly decreasing, i.e. every
    step adds noise.
    """

    alphas: Array

    def __post_init__(self) -> None:
        alphas = np.ascontiguousarray(self.alphas, dtype=np.float64)
        if alphas.ndim != 1 or alphas.size == 0:
            raise SamplingError("schedule must be a non-empty 1-D array of alphas")
        if np.any(alphas <= 0) or np.any(alphas > 1):
            raise SamplingError("alphas must lie in (0, 1]")
        bars = np.cumprod(alphas)
        if np.any(np.diff(bars) >= 0):
            raise SamplingError("cumulative alpha products must be strictly decreasing")
        alphas.setflags(write=False)
        bars.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "_alpha_bars", bars)

    @classmethod
    def linear(
        cls,
        steps: int = DEFAULT_STEPS,
        beta_start: float = DEFAULT_BETA_START,
        beta_end: float = DEFAULT_BETA_END,
    ) -> "NoiseSchedule":
        """Noise rates 1 - alpha_k spaced linearly from beta_start to beta_end."""
        if steps < 1:
            raise SamplingError("schedule needs at least one step")
        betas = np.linspace(beta_start, beta_end, steps)
        return cls(1.0 - betas)

    @property
    def step_count(self) -> int:
        return int(self.alphas.size)

    def alpha_bar(self, step: int) -> float:
        """abar_step with abar_0 defined as 1 (no noise)."""
        if step == 0:
            return 1.0
        if not 1 <= step <= self.step_count:
            raise SamplingError(f"step {step} outside schedule range 1..{self.step_count}")
        return float(self._alpha_bars[step - 1])


def forward_noising(x0: Array, step: int, eps: Array, schedule: NoiseSchedule) -> Array:
    """Noisy sample x_step = sqrt(abar) x0 + sqrt(1-abar) eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != x0.shape:
        raise SamplingError(f"noise shape {eps.shape} does not match data shape {x0.shape}")
    if not 1 <= step <= schedule.step_count:
        raise SamplingError(f"step {step} outside schedule range 1..{schedule.step_count}")
    abar = schedule.alpha_bar(step)
    return math.sqrt(abar) * x0 + math.sqrt(1.0 - abar) * eps


def align_token_features(
    tokens: Array,
    frame_count: int,
    token_times: Array | None = None,
    fps: float | None = None,
) -> Array:
    """Expand token-level features (M, d) to frame-level features (T, d).

    With per-token timestamps, frame t (at time t/fps) takes the token whose
    timestamp is nearest. Without timestamps, tokens are assumed evenly
    spread over the frames and frame t takes token argmin_i |t - (T/M) i|,
    0-based, ties to the smaller index. Every output row is a copy of some
    input row.
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 2 or tokens.shape[0] == 0:
        raise SamplingError("token features must be a non-empty (M, d) matrix")
    if frame_count < 1:
        raise SamplingError("frame_count must be at least 1")
    m = tokens.shape[0]
    if token_times is not None:
        if fps is None or fps <= 0:
            raise SamplingError("token_times require a positive fps")
        token_times = np.asarray(token_times, dtype=np.float64)
        if token_times.shape != (m,):
            raise SamplingError("token_times must have one entry per token")
        frame_times = np.arange(frame_count) / fps
        idx = np.argmin(np.abs(frame_times[:, None] - token_times[None, :]), axis=1)
    else:
        anchors = (frame_count / m) * np.arange(m)
        idx = np.argmin(np.abs(np.arange(frame_count)[:, None] - anchors[None, :]), axis=1)
    return tokens[idx]


@dataclass(frozen=True, eq=False)
class ConditioningSet:
    """Frame-aligned feature streams plus their projections to a common width.

    Streams may be omitted (None) together with their projection; at least
    one stream is required. All present streams must have the same number of
    rows and project to the same width.
    """

    mel: Array | None = None
    hubert: Array | None = None
    llm: Array | None = None
    w_mel: Array | None = None
    w_hubert: Array | None = None
    w_llm: Array | None = None

    def streams(self) -> list[tuple[str, Array, Array]]:
        present = []
        for name in ("mel", "hubert", "llm"):
            stream = getattr(self, name)
            weight = getattr(self, f"w_{name}")
            if stream is None and weight is None:
                continue
            if stream is None or weight is None:
                raise SamplingError(f"stream '{name}' and its projection must be given together")
            present.append((name, np.asarray(stream, dtype=np.float64), np.asarray(weight, dtype=np.float64)))
        if not present:
            raise SamplingError("conditioning requires at least one feature stream")
        return present


def fuse_features(cond: ConditioningSet) -> Array:
    """Sum of projected streams: each (T, d_s) @ (d_s, d_c), result (T, d_c)."""
    fused: Array | None = None
    rows: int | None = None
    for name, stream, weight in cond.streams():
        if stream.ndim != 2:
            raise SamplingError(f"stream '{name}' must be 2-D, got shape {stream.shape}")
        if weight.ndim != 2 or weight.shape[0] != stream.shape[1]:
            raise SamplingError(
                f"stream '{name}': projection shape {weight.shape} does not accept width {stream.shape[1]}"
            )
        if rows is None:
            rows = stream.shape[0]
        elif stream.shape[0] != rows:
            raise SamplingError(f"stream '{name}' has {stream.shape[0]} rows, expected {rows}")
        term = stream @ weight
        if fused is None:
            fused = term
        elif term.shape != fused.shape:
            raise SamplingError(
                f"stream '{name}' projects to width {term.shape[1]}, expected {fused.shape[1]}"
            )
        else:
            fused = fused + term
    assert fused is not None
    return fused


def noise_prediction_loss(
    denoiser: Denoiser,
    x0: Array,
    schedule: NoiseSchedule,
    conditioning: Array,
    sample_count: int,
    seed: int = 0,
) -> float:
    """Monte-Carlo estimate of E ||eps - eps_hat||^2 over uniform steps and Gaussian noise."""
    if sample_count < 1:
        raise SamplingError("sample_count must be at least 1")
    x0 = np.asarray(x0, dtype=np.float64)
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(sample_count):
        step = int(rng.integers(1, schedule.step_count + 1))
        eps = rng.standard_normal(x0.shape)
        x_k = forward_noising(x0, step, eps, schedule)
        eps_hat = denoiser(x_k, step, conditioning)
        total += float(((eps - eps_hat) ** 2).sum())
    return total / sample_count


def _step_grid(total_steps: int, step_count: int | None) -> list[int]:
    """Descending step subset from total_steps down to 1, uniformly strided."""
    if step_count is None:
        step_count = total_steps
    if not 1 <= step_count <= total_steps:
        raise SamplingError(f"step_count must lie in 1..{total_steps}")
    grid = np.unique(np.round(np.linspace(total_steps, 1, step_count)).astype(int))[::-1]
    return [int(k) for k in grid]


def _ddim_iterate(
    x: Array,
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    conditioning: Array,
    step_count: int | None,
    clamp: Callable[[Array, int], Array] | None = None,
) -> Array:
    steps = _step_grid(schedule.step_count, step_count)
    if clamp is not None:
        x = clamp(x, steps[0])
    for i, step in enumerate(steps):
        step_prev = steps[i + 1] if i + 1 < len(steps) else 0
        eps_hat = np.asarray(denoiser(x, step, conditioning), dtype=np.float64)
        if eps_hat.shape != x.shape:
            raise SamplingError(
                f"denoiser returned shape {eps_hat.shape}, expected {x.shape}"
            )
        abar = schedule.alpha_bar(step)
        abar_prev = schedule.alpha_bar(step_prev)
        x0_hat = (x - math.sqrt(1.0 - abar) * eps_hat) / math.sqrt(abar)
        x = math.sqrt(abar_prev) * x0_hat + math.sqrt(1.0 - abar_prev) * eps_hat
        if x.size and not np.all(np.isfinite(x)):
            raise SamplingError(f"non-finite sample values at denoising step {step}")
        if clamp is not None:
            x = clamp(x, step_prev)
    return x


def ddim_sample(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    conditioning: Array,
    shape: tuple[int, ...],
    step_count: int | None = None,
    seed: int = 0,
) -> Array:
    """Deterministic DDIM sample of the given shape from a seeded Gaussian start.

    Iterates x_{k'} = sqrt(abar_k') x0_hat + sqrt(1-abar_k') eps_hat with
    x0_hat = (x_k - sqrt(1-abar_k) eps_hat) / sqrt(abar_k) over a uniformly
    strided descending step subset, ending at abar_0 = 1.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    return _ddim_iterate(x, denoiser, schedule, conditioning, step_count)


def sample_windows(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    cond_windows: list[Array],
    width: int,
    *,
    clip_len: int = CLIP_FRAMES,
    overlap: int = OVERLAP_FRAMES,
    step_count: int | None = None,
    seed: int = 0,
) -> list[Array]:
    """Sample each window, clamping every later window's leading frames.

    Window 1 is sampled freely. For window i > 1 the first ``overlap`` rows
    are re-imposed at every denoising level as the forward-noised copy of the
    previous window's trailing rows (replacement-style inpainting with one
    fixed noise draw per window); at level 0 the imposed rows equal the
    previous window's rows exactly.
    """
    if not cond_windows:
        raise SamplingError("at least one conditioning window is required")
    if not 0 < overlap < clip_len:
        raise SamplingError("overlap must lie strictly between 0 and clip_len")
    rng = np.random.default_rng(seed)
    windows: list[Array] = []
    for i, cond in enumerate(cond_windows):
        cond = np.asarray(cond, dtype=np.float64)
        if cond.ndim != 2 or cond.shape[0] != clip_len:
            raise SamplingError(
                f"conditioning window {i} must have {clip_len} rows, got shape {cond.shape}"
            )
        x = rng.standard_normal((clip_len, width))
        if i == 0:
            windows.append(_ddim_iterate(x, denoiser, schedule, cond, step_count))
            continue
        known = windows[-1][clip_len - overlap :]
        eps_known = rng.standard_normal((overlap, width))

        def clamp(state: Array, level: int, _known=known, _eps=eps_known) -> Array:
            abar = schedule.alpha_bar(level)
            state = np.array(state)
            state[:overlap] = math.sqrt(abar) * _known + math.sqrt(1.0 - abar) * _eps
            return state

        windows.append(_ddim_iterate(x, denoiser, schedule, cond, step_count, clamp=clamp))
    return windows


def motion_from_tensor(x: Array, fps: float) -> MotionSequence:
    """Reshape a (T, 4J) tensor into a motion track, normalizing each quaternion."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] % 4 != 0:
        raise SamplingError(f"motion tensor must have shape (T, 4J), got {x.shape}")
    rotations = quat_normalize(x.reshape(x.shape[0], -1, 4))
    return MotionSequence(rotations, np.zeros((x.shape[0], 3)), fps=fps)


def inpaint_long_sequence(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    cond_windows: list[Array],
    total_frames: int,
    joint_count: int,
    seed: int = 0,
    *,
    fps: float = 30.0,
    clip_len: int = CLIP_FRAMES,
    overlap: int = OVERLAP_FRAMES,
    step_count: int | None = None,
) -> MotionSequence:
    """Long-sequence generation on the overlapping window grid.

    Windows of ``clip_len`` frames advance by ``clip_len - overlap``, so
    window i starts at frame (i-1) * (clip_len - overlap). After clamped
    sampling, each overlap is blended with a linear weight ramp: rotations by
    per-joint slerp, root translations linearly (here identically zero, since
    the motion tensor carries rotations only).
    """
    if total_frames < clip_len:
        raise SamplingError(f"total_frames must be at least one window ({clip_len} frames)")
    stride = clip_len - overlap
    expected = clip_len + stride * (len(cond_windows) - 1)
    if total_frames != expected:
        raise SamplingError(
            f"total_frames {total_frames} does not match {len(cond_windows)} windows "
            f"of {clip_len} frames with {overlap}-frame overlap (expected {expected})"
        )
    raw = sample_windows(
        denoiser,
        schedule,
        cond_windows,
        width=4 * joint_count,
        clip_len=clip_len,
        overlap=overlap,
        step_count=step_count,
        seed=seed,
    )
    tracks = [quat_normalize(w.reshape(clip_len, joint_count, 4)) for w in raw]
    rotations = np.empty((total_frames, joint_count, 4))
    rotations[:clip_len] = tracks[0]
    ramp = (np.arange(1, overlap + 1)) / (overlap + 1)
    for i in range(1, len(tracks)):
        start = stride * i
        for f in range(overlap):
            rotations[start + f] = slerp(rotations[start + f], tracks[i][f], ramp[f])
        rotations[start + overlap : start + clip_len] = tracks[i][overlap:]
    return MotionSequence(rotations, np.zeros((total_frames, 3)), fps=fps)


def segment_conditioning(
    conditioning: Array, clip_len: int = CLIP_FRAMES, overlap: int = OVERLAP_FRAMES
) -> tuple[list[Array], int]:
    """Split (T, d_c) conditioning into overlapping windows on the sampling grid.

    Returns (windows, padded_total). When T is off the grid the tail is
    padded by repeating the last row; callers truncate the sampled motion
    back to T frames.
    """
    conditioning = np.asarray(conditioning, dtype=np.float64)
    t = conditioning.shape[0]
    stride = clip_len - overlap
    windows_needed = 1 if t <= clip_len else 1 + math.ceil((t - clip_len) / stride)
    padded_total = clip_len + stride * (windows_needed - 1)
    if padded_total > t:
        pad = np.repeat(conditioning[-1:], padded_total - t, axis=0)
        conditioning = np.concatenate([conditioning, pad])
    windows = [conditioning[i * stride : i * stride + clip_len] for i in range(windows_needed)]
    return windows, padded_total


# ---------------------------------------------------------------------------
# reference denoiser backends and their on-disk format


@dataclass(frozen=True, eq=False)
class LinearDenoiser:
    """Per-frame affine noise predictor: x @ w_x + cond @ w_c + (k/K) w_k + bias."""

    w_x: Array
    w_c: Array
    w_k: Array
    bias: Array
    total_steps: int

    def __call__(self, x: Array, step: int, conditioning: Array) -> Array:
        ratio = step / self.total_steps
        return x @ self.w_x + np.asarray(conditioning) @ self.w_c + ratio * self.w_k + self.bias


@dataclass(frozen=True, eq=False)
class TargetDenoiser:
    """Closed-form optimal predictor when the data law is a point mass at ``target``."""

    target: Array
    schedule: NoiseSchedule

    def __call__(self, x: Array, step: int, conditioning: Array) -> Array:
        abar = self.schedule.alpha_bar(step)
        target = self.target
        if target.shape != x.shape:
            raise SamplingError(f"target shape {target.shape} does not match sample {x.shape}")
        return (x - math.sqrt(abar) * target) / math.sqrt(1.0 - abar)


@dataclass(frozen=True, eq=False)
class LoadedDenoiser:
    denoiser: Denoiser
    motion_dim: int
    cond_dim: int
    projections: dict[str, Array]
    skeleton: Skeleton | None = None


def save_linear_denoiser(
    denoiser: LinearDenoiser,
    projections: dict[str, Array],
    path: str | Path,
    skeleton: Skeleton | None = None,
) -> None:
    write_canonical(
        {
            "format_version": FORMAT_VERSION,
            "kind": "denoiser",
            "backend": "linear",
            "total_steps": denoiser.total_steps,
            "w_x": denoiser.w_x.tolist(),
            "w_c": denoiser.w_c.tolist(),
            "w_k": denoiser.w_k.tolist(),
            "bias": denoiser.bias.tolist(),
            "projections": {name: w.tolist() for name, w in projections.items()},
            "skeleton": None if skeleton is None else skeleton_to_dict(skeleton),
        },
        path,
    )


def save_target_denoiser(
    target: Array,
    cond_dim: int,
    projections: dict[str, Array],
    path: str | Path,
    skeleton: Skeleton | None = None,
) -> None:
    write_canonical(
        {
            "format_version": FORMAT_VERSION,
            "kind": "denoiser",
            "backend": "target",
            "target": np.asarray(target, dtype=np.float64).tolist(),
            "cond_dim": cond_dim,
            "projections": {name: w.tolist() for name, w in projections.items()},
            "skeleton": None if skeleton is None else skeleton_to_dict(skeleton),
        },
        path,
    )


def load_denoiser(path: str | Path, schedule: NoiseSchedule) -> LoadedDenoiser:
    """Load a registered denoiser backend ('linear' or 'target') from disk."""
    raw = read_json(path, "denoiser")
    backend = raw.get("backend")
    projections = {
        name: np.asarray(mat, dtype=np.float64)
        for name, mat in (raw.get("projections") or {}).items()
    }
    skeleton = None
    if raw.get("skeleton") is not None:
        skeleton = skeleton_from_dict(raw["skeleton"], context=f"{path}: skeleton")
    try:
        if backend == "linear":
            denoiser = LinearDenoiser(
                w_x=np.asarray(raw["w_x"], dtype=np.float64),
                w_c=np.asarray(raw["w_c"], dtype=np.float64),
                w_k=np.asarray(raw["w_k"], dtype=np.float64),
                bias=np.asarray(raw["bias"], dtype=np.float64),
                total_steps=int(raw.get("total_steps", schedule.step_count)),
            )
            return LoadedDenoiser(
                denoiser=denoiser,
                motion_dim=int(denoiser.w_x.shape[0]),
                cond_dim=int(denoiser.w_c.shape[0]),
                projections=projections,
                skeleton=skeleton,
            )
        if backend == "target":
            target = np.asarray(raw["target"], dtype=np.float64)
            return LoadedDenoiser(
                denoiser=TargetDenoiser(target=target, schedule=schedule),
                motion_dim=int(target.shape[1]),
                cond_dim=int(raw["cond_dim"]),
                projections=projections,
                skeleton=skeleton,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"{path}: malformed denoiser model: {exc}") from exc
    raise DocumentError(f"{path}: unknown denoiser backend {backend!r}")


def load_schedule(path: str | Path | None) -> tuple[NoiseSchedule, int | None]:
    """Load a schedule document; None gives the default linear schedule."""
    if path is None:
        return NoiseSchedule.linear(), None
    raw = read_json(path, "schedule")
    sample_steps = raw.get("sample_steps")
    if sample_steps is not None and (not isinstance(sample_steps, int) or sample_steps < 1):
        raise DocumentError(f"{path}: sample_steps must be a positive integer")
    family = raw.get("schedule", "linear")
    if family == "linear":
        schedule = NoiseSchedule.linear(
            steps=int(raw.get("steps", DEFAULT_STEPS)),
            beta_start=float(raw.get("beta_start", DEFAULT_BETA_START)),
            beta_end=float(raw.get("beta_end", DEFAULT_BETA_END)),
        )
    elif family == "explicit":
        schedule = NoiseSchedule(np.asarray(raw.get("alphas"), dtype=np.float64))
    else:
        raise DocumentError(f"{path}: unknown schedule family {family!r}")
    return schedule, sample_steps
