from .alignment import FusionConfig, FusionVariant, align_features, fuse_levels, mafa_align, oaff_fuse
from .interpolation import FlowField, FusionError, MergeMask, synthesize_intermediate

__all__ = [
    "FlowField",
    "FusionConfig",
    "FusionError",
    "FusionVariant",
    "MergeMask",
    "align_features",
    "fuse_levels",
    "mafa_align",
    "oaff_fuse",
    "synthesize_intermediate",
]
