"""Command-line client for the pipeline service.

Every subcommand builds a typed request and dispatches it: in-process by
default, or to a running service instance when ``--server URL`` is given.
Results are printed as one JSON line on stdout; logs and warnings go to
stderr. Exit codes: 0 success, 1 runtime error (one machine-parsable JSON
line on stderr), 2 usage error.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from typing import Callable

import click
from pydantic import BaseModel

from .config import KEY_DOCS, load_config_file, resolve_config
from .errors import GestureGraphError
from .service import handlers, schemas


def _config_epilog() -> str:
    lines = ["\b", "Configuration keys (config file: one 'key = value' per line; flags win):"]
    for key, doc in KEY_DOCS.items():
        lines.append(f"  {key:<20} {doc}")
    return "\n".join(lines)


@click.group(epilog=_config_epilog())
def main() -> None:
    """Motion-graph gesture synthesis pipeline.

    Subcommands cover the full flow: build-graph, sample, retrieve, stitch,
    metrics, and inspect. Start the HTTP service with
    'uvicorn gesturegraph.service.app:app' and point any subcommand at it
    with --server.
    """
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")


ENDPOINT_PATHS = {
    schemas.BuildGraphRequest: "/graph/build",
    schemas.InspectRequest: "/graph/inspect",
    schemas.RetrieveRequest: "/retrieve",
    schemas.SampleRequest: "/sample",
    schemas.StitchRequest: "/stitch",
    schemas.MetricsRequest: "/metrics",
}


def _dispatch(server: str | None, request: BaseModel, handler: Callable) -> dict:
    if server is None:
        return handler(request).model_dump()
    import httpx

    url = server.rstrip("/") + ENDPOINT_PATHS[type(request)]
    try:
        response = httpx.post(url, json=request.model_dump(), timeout=600.0)
    except httpx.HTTPError as exc:
        raise GestureGraphError(f"service unreachable at {url}: {exc}") from exc
    if response.status_code >= 400:
        try:
            payload = response.json()
        except ValueError:
            payload = {"error": "HTTPError", "detail": response.text}
        raise GestureGraphError(f"{payload.get('error')}: {payload.get('detail')}")
    return response.json()


def _domain_errors(fn: Callable) -> Callable:
    """Report domain failures as one JSON line on stderr and exit 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (GestureGraphError, OSError) as exc:
            click.echo(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), err=True)
            sys.exit(1)

    return wrapper


def _run(server: str | None, request: BaseModel, handler: Callable) -> None:
    payload = _dispatch(server, request, handler)
    for message in payload.get("warnings") or []:
        click.echo(f"warning: {message}", err=True)
    click.echo(json.dumps(payload, sort_keys=True))


server_option = click.option("--server", default=None, help="URL of a running service instance.")
config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True), default=None,
    help="Config file; explicit flags take precedence.",
)


@main.command("build-graph")
@click.option("--motion", "motion_path", required=True, type=click.Path(), help="Input motion document.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output graph file (.json or .bin).")
@click.option("--lambda-p", type=float, default=None, help="Positional threshold scale. [default: 1.3]")
@click.option("--lambda-v", type=float, default=None, help="Velocity threshold scale. [default: 1.3]")
@click.option("--th", type=float, default=None, help="Joint consensus fraction. [default: 0.95]")
@click.option("--no-prefilter", is_flag=True, help="Disable the exact candidate prefilter (audit builds).")
@click.option("--keep-all-sccs", is_flag=True, help="Skip pruning to the largest strongly connected component.")
@click.option("--workers", type=int, default=None, help="Worker threads. [default: 1]")
@config_option
@server_option
@_domain_errors
def build_graph_command(motion_path, out_path, lambda_p, lambda_v, th, no_prefilter, keep_all_sccs, workers, config_path, server):
    """Build a motion graph from a motion document."""
    cfg = resolve_config(
        config_path,
        lambda_p=lambda_p,
        lambda_v=lambda_v,
        th=th,
        workers=workers,
        prefilter=False if no_prefilter else None,
        keep_all_sccs=True if keep_all_sccs else None,
    )
    request = schemas.BuildGraphRequest(
        motion_path=motion_path,
        out_path=out_path,
        lambda_p=cfg.lambda_p,
        lambda_v=cfg.lambda_v,
        th=cfg.th,
        prefilter=cfg.prefilter,
        keep_all_sccs=cfg.keep_all_sccs,
        workers=cfg.workers,
    )
    _run(server, request, handlers.build_graph)


@main.command("retrieve")
@click.option("--graph", "graph_path", required=True, type=click.Path(), help="Motion graph file.")
@click.option("--query", "query_path", required=True, type=click.Path(), help="Query motion document.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output path file.")
@click.option("--beam", type=int, default=None, help="Beam width K. [default: 200]")
@click.option("--gamma", type=float, default=None, help="Pruning slack; 'inf' disables. [default: 1.5]")
@click.option("--beta", type=float, default=None, help="Transition edge penalty. [default: 0.1]")
@click.option("--lambda-r", type=float, default=None, help="Rotational distance weight. [default: 1.0]")
@click.option("--lambda-p", type=float, default=None, help="Positional distance weight. [default: 1.0]")
@click.option("--absolute-positions", is_flag=True, help="Compare world-space instead of root-relative positions.")
@click.option("--normalize-positions", is_flag=True, help="Divide positional distance by mean upper-body bone length.")
@click.option("--workers", type=int, default=None, help="Worker threads where parallelism applies; results are identical for any value. [default: 1]")
@config_option
@server_option
@_domain_errors
def retrieve_command(graph_path, query_path, out_path, beam, gamma, beta, lambda_r, lambda_p, absolute_positions, normalize_positions, workers, config_path, server):
    """Retrieve the minimum-cost time-aligned walk for a query motion."""
    cfg = resolve_config(
        config_path,
        workers=workers,
        beam_width=beam,
        gamma=gamma,
        beta=beta,
        lambda_r=lambda_r,
        lambda_p_metric=lambda_p,
        absolute_positions=True if absolute_positions else None,
        normalize_positions=True if normalize_positions else None,
    )
    request = schemas.RetrieveRequest(
        graph_path=graph_path,
        query_path=query_path,
        out_path=out_path,
        beam=cfg.beam_width,
        gamma=cfg.gamma,
        beta=cfg.beta,
        lambda_r=cfg.lambda_r,
        lambda_p=cfg.lambda_p_metric,
        absolute_positions=cfg.absolute_positions,
        normalize_positions=cfg.normalize_positions,
    )
    _run(server, request, handlers.retrieve)


@main.command("sample")
@click.option("--features", "features_path", required=True, type=click.Path(), help="Feature document.")
@click.option("--denoiser", "denoiser_path", required=True, type=click.Path(), help="Denoiser model file.")
@click.option("--schedule", "schedule_path", type=click.Path(), default=None, help="Schedule document. [default: linear, 1000 steps]")
@click.option("--skeleton", "skeleton_path", type=click.Path(), default=None, help="Skeleton document (overrides the model's embedded skeleton).")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output motion document.")
@click.option("--seed", type=int, default=None, help="Random seed. [default: 0]")
@click.option("--steps", "sample_steps", type=int, default=None, help="Denoising steps at inference. [default: 50]")
@click.option("--clip-len", type=int, default=None, help="Sampling window length in frames. [default: 90]")
@click.option("--overlap", type=int, default=None, help="Sampling window overlap in frames. [default: 6]")
@click.option("--workers", type=int, default=None, help="Worker threads where parallelism applies; results are identical for any value. [default: 1]")
@config_option
@server_option
@_domain_errors
def sample_command(features_path, denoiser_path, schedule_path, skeleton_path, out_path, seed, sample_steps, clip_len, overlap, workers, config_path, server):
    """Generate a query motion from conditioning features."""
    cfg = resolve_config(
        config_path, seed=seed, sample_steps=sample_steps, clip_len=clip_len,
        overlap=overlap, workers=workers,
    )
    # leave steps unset unless given by flag or config file, so the schedule
    # document's own sample_steps can apply
    explicit_steps = sample_steps
    if explicit_steps is None and config_path is not None:
        explicit_steps = load_config_file(config_path).get("sample_steps")
    request = schemas.SampleRequest(
        features_path=features_path,
        denoiser_path=denoiser_path,
        skeleton_path=skeleton_path,
        schedule_path=schedule_path,
        out_path=out_path,
        seed=cfg.seed,
        sample_steps=explicit_steps,
        clip_len=cfg.clip_len,
        overlap=cfg.overlap,
    )
    _run(server, request, handlers.sample)


@main.command("stitch")
@click.option("--graph", "graph_path", required=True, type=click.Path(), help="Motion graph file.")
@click.option("--path", "path_path", required=True, type=click.Path(), help="Retrieved path file.")
@click.option("--out-motion", required=True, type=click.Path(), help="Output motion document.")
@click.option("--out-plan", required=True, type=click.Path(), help="Output render plan.")
@click.option("--preserve-length/--no-preserve-length", default=None,
              help="Replace instead of insert frames at transitions. [default: preserve]")
@click.option("--workers", type=int, default=None, help="Worker threads where parallelism applies; results are identical for any value. [default: 1]")
@config_option
@server_option
@_domain_errors
def stitch_command(graph_path, path_path, out_motion, out_plan, preserve_length, workers, config_path, server):
    """Convert a retrieved path into a motion track plus a render plan."""
    cfg = resolve_config(config_path, preserve_length=preserve_length, workers=workers)
    request = schemas.StitchRequest(
        graph_path=graph_path,
        path_path=path_path,
        out_motion=out_motion,
        out_plan=out_plan,
        preserve_length=cfg.preserve_length,
    )
    _run(server, request, handlers.stitch)


@main.command("metrics")
@click.option("--motion", "motion_path", required=True, type=click.Path(), help="Motion document to evaluate.")
@click.option("--beats", "beats_path", type=click.Path(), default=None, help="Audio beat file (one onset per line, seconds).")
@click.option("--sigma", type=float, default=None, help="Beat-consistency kernel width in seconds. [default: 0.1]")
@click.option("--prominence", type=float, default=None, help="Kinematic-beat prominence in m/s. [default: 0.05]")
@click.option("--diversity-set", type=str, default=None, help="Glob of motion documents for the diversity score.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output report (JSON).")
@click.option("--workers", type=int, default=None, help="Worker threads where parallelism applies; results are identical for any value. [default: 1]")
@config_option
@server_option
@_domain_errors
def metrics_command(motion_path, beats_path, sigma, prominence, diversity_set, out_path, workers, config_path, server):
    """Compute beat and diversity metrics for motion documents."""
    cfg = resolve_config(config_path, sigma=sigma, prominence=prominence, workers=workers)
    request = schemas.MetricsRequest(
        motion_path=motion_path,
        out_path=out_path,
        beats_path=beats_path,
        sigma=cfg.sigma,
        prominence=cfg.prominence,
        diversity_set=diversity_set,
    )
    _run(server, request, handlers.metrics)


@main.command("inspect")
@click.option("--graph", "graph_path", required=True, type=click.Path(), help="Motion graph file.")
@click.option("--workers", type=int, default=None, help="Worker threads where parallelism applies; results are identical for any value. [default: 1]")
@server_option
@_domain_errors
def inspect_command(graph_path, workers, server):
    """Print node/edge counts, SCC size, and transition fraction of a graph."""
    resolve_config(None, workers=workers)
    _run(server, schemas.InspectRequest(graph_path=graph_path), handlers.inspect)


if __name__ == "__main__":
    main()
