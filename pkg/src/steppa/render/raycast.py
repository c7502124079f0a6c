"""Depth and steppability-mask rendering of labeled scenes."""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass

import numpy as np

from ..camera import IN_FRAME, BehindCamera, CameraPose, InFrame, Intrinsics, OutOfFrame, pixel_rays
from .bvh import BVH, build_bvh, trace_rays

NO_HIT = np.inf


class MaskValue(enum.IntEnum):
    """Mask pixel values; 1..3 coincide with SteppabilityLabel."""

    BACKGROUND = 0
    STEPPABLE = 1
    PASSABLE = 2
    NON_PASSABLE = 3


class QueryLabel(enum.IntEnum):
    """Result of looking up a projected point in a mask."""

    BACKGROUND = 0
    STEPPABLE = 1
    PASSABLE = 2
    NON_PASSABLE = 3
    OUT_OF_FRAME = 4


@dataclass(frozen=True)
class RenderConfig:
    """Depth validity band and optional depth noise.

    The default band [1, 3] m reflects the dense range of a small stereo
    module; planning uses a 0.3 m near limit so that the next footholds stay
    visible.
    """

    min_range: float = 1.0
    max_range: float = 3.0
    depth_noise_std: float = 0.0
    noise_seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if not (0 < self.min_range < self.max_range):
            raise ValueError("need 0 < min_range < max_range")
        if self.depth_noise_std < 0:
            raise ValueError("depth_noise_std must be >= 0")


PLANNING_RENDER = RenderConfig(min_range=0.3, max_range=3.0)


@dataclass(frozen=True, eq=False)
class DepthImage:
    depth: np.ndarray  # (height, width) float64, NO_HIT = +inf
    min_range: float
    max_range: float

    @property
    def width(self) -> int:
        return int(self.depth.shape[1])

    @property
    def height(self) -> int:
        return int(self.depth.shape[0])

    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth)


@dataclass(frozen=True, eq=False)
class LabelMask:
    values: np.ndarray  # (height, width) uint8 of MaskValue

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class Frame:
    depth: DepthImage
    mask: LabelMask
    pose: CameraPose
    intrinsics: Intrinsics
    scene_id: str = ""
    frame_index: int = 0

    def __post_init__(self):
        if self.depth.depth.shape != self.mask.values.shape:
            raise ValueError("depth and mask dimensions differ")
        if self.depth.depth.shape != (self.intrinsics.height, self.intrinsics.width):
            raise ValueError("image dimensions do not match intrinsics")

    def metadata(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "frame_index": self.frame_index,
            "intrinsics": self.intrinsics.to_dict(),
            "pose": self.pose.to_dict(),
            "min_range": self.depth.min_range,
            "max_range": self.depth.max_range,
        }


@dataclass(frozen=True, eq=False)
class SceneGeometry:
    """Flattened triangle soup of a scene with its BVH."""

    tris: np.ndarray
    labels: np.ndarray
    owners: np.ndarray
    bvh: BVH


_GEOMETRY_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def scene_geometry(scene) -> SceneGeometry:
    """Triangles, labels and BVH of ``scene``; cached per scene version."""
    cached = _GEOMETRY_CACHE.get(scene)
    if cached is not None:
        return cached
    meshes = scene.all_meshes()
    for m in meshes:
        if not m.labeled:
            raise ValueError(f"mesh of primitive {m.owner_id} has unlabeled faces")
    if meshes:
        tris = np.concatenate([m.triangle_vertices() for m in meshes])
        labels = np.concatenate([m.face_labels for m in meshes]).astype(np.uint8)
        owners = np.concatenate([np.full(m.n_triangles, m.owner_id, dtype=np.int64) for m in meshes])
    else:
        tris, labels, owners = np.zeros((0, 3, 3)), np.zeros(0, np.uint8), np.zeros(0, np.int64)
    geo = SceneGeometry(tris, labels, owners, build_bvh(tris))
    _GEOMETRY_CACHE[scene] = geo
    return geo


def raycast_frame(
    scene,
    K: Intrinsics,
    pose: CameraPose,
    config: RenderConfig | None = None,
    scene_id: str = "",
    frame_index: int = 0,
) -> Frame:
    """Render depth and mask by casting one ray through each pixel centre."""
    config = config or RenderConfig()
    geo = scene_geometry(scene)
    origin, dirs = pixel_rays(K, pose)
    t, tri = trace_rays(geo.bvh, origin, dirs, config.threads)
    if config.depth_noise_std > 0:
        rng = np.random.default_rng(config.noise_seed)
        t = t + rng.normal(0.0, config.depth_noise_std, size=t.shape)
    valid = np.isfinite(t) & (t >= config.min_range) & (t <= config.max_range)
    depth = np.where(valid, t, NO_HIT)
    mask = np.zeros(t.shape, dtype=np.uint8)
    mask[valid] = geo.labels[tri[valid]]
    shape = (K.height, K.width)
    return Frame(
        DepthImage(depth.reshape(shape), config.min_range, config.max_range),
        LabelMask(mask.reshape(shape)),
        pose,
        K,
        scene_id,
        frame_index,
    )


def mask_query(mask: LabelMask, px) -> QueryLabel:
    if isinstance(px, (OutOfFrame, BehindCamera)):
        return QueryLabel.OUT_OF_FRAME
    if not isinstance(px, InFrame):
        raise TypeError(f"expected a PixelResult, got {type(px).__name__}")
    col, row = int(np.floor(px.u)), int(np.floor(px.v))
    if not (0 <= row < mask.height and 0 <= col < mask.width):
        return QueryLabel.OUT_OF_FRAME
    return QueryLabel(int(mask.values[row, col]))


def mask_query_many(mask: LabelMask, u, v, status) -> np.ndarray:
    """Vectorized ``mask_query`` over projected points; returns QueryLabel codes."""
    out = np.full(np.shape(status), int(QueryLabel.OUT_OF_FRAME), dtype=np.int64)
    inside = np.asarray(status) == IN_FRAME
    if np.any(inside):
        cols = np.floor(np.asarray(u)[inside]).astype(np.int64)
        rows = np.floor(np.asarray(v)[inside]).astype(np.int64)
        ok = (rows >= 0) & (rows < mask.height) & (cols >= 0) & (cols < mask.width)
        vals = np.full(cols.shape, int(QueryLabel.OUT_OF_FRAME), dtype=np.int64)
        vals[ok] = mask.values[rows[ok], cols[ok]]
        out[inside] = vals
    return out


__all__ = [
    "NO_HIT",
    "DepthImage",
    "Frame",
    "LabelMask",
    "MaskValue",
    "PLANNING_RENDER",
    "QueryLabel",
    "RenderConfig",
    "mask_query",
    "mask_query_many",
    "raycast_frame",
    "scene_geometry",
]
