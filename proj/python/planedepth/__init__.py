"""Depth from piecewise-planar video segments."""

from ._core import (
    ForestModel,
    camera_defaults,
    default_config,
    depth_preview,
    evaluate,
    feature_names,
    flow,
    read_pfm,
    segment,
    solve_planes,
    synth,
    train_forest,
    write_pfm,
)

__all__ = [
    "ForestModel",
    "camera_defaults",
    "default_config",
    "depth_preview",
    "evaluate",
    "feature_names",
    "flow",
    "read_pfm",
    "segment",
    "solve_planes",
    "synth",
    "train_forest",
    "write_pfm",
]
