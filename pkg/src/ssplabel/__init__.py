"""Point-supervised oriented pseudo-box generation.

Two stages turn point annotations into dense supervision: an assignment map
built from spatial partitioning and region growing on the raw image, and
one oriented box per point extracted from a semantic score map.
"""
from .assignment import AssignConfig, pspsa
from .extraction import ExtractConfig, PseudoLabelSet, sspbe
from .geometry import RotatedBox, min_area_rect, pca_minmax_rect, rotated_iou
from .maps import BACKGROUND, IGNORE, AssignmentMap, GrayImage, GtPoint, SemanticMap
from .partition import GrowConfig, region_grow, spatial_partition
from .synth import SceneConfig, generate_scene

__version__ = "0.1.0"

__all__ = [
    "AssignConfig", "AssignmentMap", "BACKGROUND", "ExtractConfig", "GrayImage", "GrowConfig",
    "GtPoint", "IGNORE", "PseudoLabelSet", "RotatedBox", "SceneConfig", "SemanticMap",
    "generate_scene", "min_area_rect", "pca_minmax_rect", "pspsa", "region_grow", "rotated_iou",
    "spatial_partition", "sspbe",
]
