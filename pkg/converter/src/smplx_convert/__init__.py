"""SMPL-X parameter archive converter for the motion-synthesis document formats."""

from .convert import (
    ConversionError,
    ConversionResult,
    axis_angle_to_quat,
    convert_archive,
    detect_input_kind,
    load_skeleton_definition,
    reexport_motion,
)

__version__ = "0.1.0"

__all__ = [
    "ConversionError",
    "ConversionResult",
    "axis_angle_to_quat",
    "convert_archive",
    "detect_input_kind",
    "load_skeleton_definition",
    "reexport_motion",
]
