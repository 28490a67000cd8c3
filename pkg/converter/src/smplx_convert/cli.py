"""Command-line entry point: convert archives to motion/feature documents."""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click

from .convert import (
    ConversionError,
    TARGET_FPS,
    convert_archive,
    detect_input_kind,
    dumps_canonical,
    load_skeleton_definition,
    reexport_motion,
)


def bundled_skeleton_path() -> Path:
    """Path of the packaged SMPL-X body-22 skeleton definition."""
    return Path(resources.files("smplx_convert") / "data" / "smplx_body22.json")


@click.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="Input archive (.npz) or an already-converted motion document.")
@click.option("--skeleton", "skeleton_path", type=click.Path(exists=True), default=None,
              help="Skeleton definition document. [default: bundled SMPL-X body-22]")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output motion document.")
@click.option("--features-out", type=click.Path(), default=None,
              help="Also write a feature document when the archive carries feature arrays.")
@click.option("--fps", type=float, default=TARGET_FPS, show_default=True,
              help="Target frame rate; sources at other rates are nearest-frame resampled.")
def main(in_path, skeleton_path, out_path, features_out, fps):
    """Convert SMPL-X parameter archives into motion-synthesis documents.

    Re-running on an already-converted motion document re-emits it
    canonically (idempotent).
    """
    try:
        if detect_input_kind(in_path) == "motion":
            doc = reexport_motion(in_path)
            Path(out_path).write_text(dumps_canonical(doc), encoding="utf-8")
            click.echo(json.dumps({"out_path": out_path, "clips": len(doc.get("clips", []))}))
            return
        skeleton = load_skeleton_definition(skeleton_path or bundled_skeleton_path())
        result = convert_archive(in_path, skeleton, target_fps=fps)
        Path(out_path).write_text(dumps_canonical(result.motion), encoding="utf-8")
        if features_out is not None:
            if result.features is None:
                raise ConversionError("archive carries no feature arrays for --features-out")
            Path(features_out).write_text(dumps_canonical(result.features), encoding="utf-8")
        for report in result.reports:
            if report.dropped_nan or report.resampled_from is not None:
                note = f"clip '{report.clip_id}': kept {report.frames_out}/{report.frames_in} frames"
                if report.dropped_nan:
                    note += f", dropped {report.dropped_nan} non-finite"
                if report.resampled_from is not None:
                    note += f", resampled from {report.resampled_from:g} fps"
                click.echo(note, err=True)
        click.echo(
            json.dumps(
                {
                    "out_path": out_path,
                    "clips": len(result.motion["clips"]),
                    "features_out": features_out,
                }
            )
        )
    except (ConversionError, OSError, ValueError, KeyError) as exc:
        click.echo(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
