"""Offline handwritten signature verification.

Structural matching of signature images along two routes — keypoint
graphs compared by approximate graph edit distance, and part-structured
ink models matched by deformable tree energy — normalized per writer,
fused into a combined score, and evaluated with standard biometric error
rates. See the command line in :mod:`sigver.cli` for the batch pipeline.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .errors import SigverError
from .ged import CostParams, d_ged
from .graph import KeypointGraph, extract_keypoint_graph
from .imaging import GrayImage, SkeletonImage, load_grayscale, preprocess
from .inkball import InkballModel, MatchParams, build_model, d_inkball, match
from .verify import mcs_score, verification_score

__all__ = [
    "CostParams",
    "GrayImage",
    "InkballModel",
    "KeypointGraph",
    "MatchParams",
    "RunConfig",
    "SigverError",
    "SkeletonImage",
    "__version__",
    "build_model",
    "d_ged",
    "d_inkball",
    "extract_keypoint_graph",
    "load_grayscale",
    "match",
    "mcs_score",
    "preprocess",
    "verification_score",
]
