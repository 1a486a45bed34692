"""Part-structured stroke models and their deformable matching."""

from .model import (
    InkballModel,
    angle_diff,
    build_model,
    compute_tangents,
    load_model,
    save_model,
)
from .match import (
    ANGLE_BINS,
    EnergyField,
    MatchParams,
    d_inkball,
    gdt_quadratic,
    match,
    placement_field,
    squared_distance_field,
)

__all__ = [
    "ANGLE_BINS",
    "EnergyField",
    "InkballModel",
    "MatchParams",
    "angle_diff",
    "build_model",
    "compute_tangents",
    "d_inkball",
    "gdt_quadratic",
    "load_model",
    "match",
    "placement_field",
    "save_model",
    "squared_distance_field",
]
