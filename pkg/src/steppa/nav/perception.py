"""What the robot has seen: egocentric frames and the accumulated ground footprint."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation

from ..camera import DEFAULT_HEIGHT, DEFAULT_PITCH, CameraPose, pixel_rays
from ..planner.types import FootId, Mode, NOMINAL_COM_HEIGHT
from ..render.raycast import Frame

# camera mount ahead of the torso centre
CAMERA_FORWARD = 0.05


def stance_heading(mode: Mode) -> float:
    p = mode.positions
    front = (p[FootId.LF] + p[FootId.RF]) / 2
    hind = (p[FootId.LH] + p[FootId.RH]) / 2
    d = front - hind
    return math.atan2(d[1], d[0])


def camera_pose(mode: Mode, timestamp: float = 0.0) -> CameraPose:
    """Head camera for a stance: level body at nominal height, fixed downward pitch."""
    c = mode.com()
    yaw = stance_heading(mode)
    ground = c[2] - NOMINAL_COM_HEIGHT
    return CameraPose.from_body(
        c[0] + CAMERA_FORWARD * math.cos(yaw),
        c[1] + CAMERA_FORWARD * math.sin(yaw),
        ground + DEFAULT_HEIGHT,
        0.0,
        DEFAULT_PITCH,
        yaw,
        timestamp,
    )


def hit_points(frame: Frame) -> np.ndarray:
    """World points of all valid depth pixels."""
    origin, dirs = pixel_rays(frame.intrinsics, frame.pose)
    t = frame.depth.depth.ravel()
    ok = np.isfinite(t)
    return origin + dirs[ok] * t[ok, None]


@dataclass
class PerceivedRegion:
    """Boolean ground grid of cells touched by valid depth, grown by ``dilation`` cells."""

    cell: float = 0.1
    extent: float = 2.5
    dilation: int = 1

    def __post_init__(self):
        n = int(math.ceil(2 * self.extent / self.cell))
        self.grid = np.zeros((n, n), dtype=bool)

    def _index(self, xy) -> tuple[np.ndarray, np.ndarray]:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))[:, :2]
        ij = np.floor((xy + self.extent) / self.cell).astype(np.int64)
        return ij[:, 0], ij[:, 1]

    def mark(self, xy) -> None:
        i, j = self._index(xy)
        n = self.grid.shape[0]
        ok = (i >= 0) & (i < n) & (j >= 0) & (j < n)
        self.grid[i[ok], j[ok]] = True

    def mark_frame(self, frame: Frame) -> None:
        self.mark(hit_points(frame))

    def mark_stance(self, mode: Mode) -> None:
        """The ground under the robot is known from contact."""
        p = mode.positions[:, :2]
        lo, hi = p.min(axis=0), p.max(axis=0)
        xs = np.arange(lo[0], hi[0] + self.cell, self.cell / 2)
        ys = np.arange(lo[1], hi[1] + self.cell, self.cell / 2)
        gx, gy = np.meshgrid(xs, ys)
        self.mark(np.column_stack([gx.ravel(), gy.ravel()]))

    def dilated(self) -> np.ndarray:
        if self.dilation <= 0:
            return self.grid.copy()
        return binary_dilation(self.grid, np.ones((3, 3), dtype=bool), iterations=self.dilation)

    def contains(self, points) -> np.ndarray:
        i, j = self._index(points)
        n = self.grid.shape[0]
        ok = (i >= 0) & (i < n) & (j >= 0) & (j < n)
        g = self.dilated()
        out = np.zeros(len(i), dtype=bool)
        out[ok] = g[i[ok], j[ok]]
        return out

    @property
    def n_cells(self) -> int:
        return int(self.grid.sum())

    def bound(self, origin) -> float:
        """Farthest distance from ``origin`` of any perceived cell centre."""
        i, j = np.nonzero(self.grid)
        if i.size == 0:
            return 0.0
        centres = np.column_stack([i, j]) * self.cell - self.extent + self.cell / 2
        return float(np.linalg.norm(centres - np.asarray(origin, dtype=float)[:2], axis=1).max())


__all__ = ["CAMERA_FORWARD", "PerceivedRegion", "camera_pose", "hit_points", "stance_heading"]
