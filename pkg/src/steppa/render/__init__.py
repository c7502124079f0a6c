"""Depth and steppability-mask rendering, image encoding and dataset export."""

from .dataset import DatasetManifest, ExportError, TrajectoryConfig, export_dataset
from .io import MaskFormatError, load_mask, read_pfm, write_mask_png, write_pfm
from .raycast import (
    NO_HIT,
    PLANNING_RENDER,
    DepthImage,
    Frame,
    LabelMask,
    MaskValue,
    QueryLabel,
    RenderConfig,
    mask_query,
    mask_query_many,
    raycast_frame,
    scene_geometry,
)
