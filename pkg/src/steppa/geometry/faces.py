"""Analytic description of the steppable face of each primitive.

The lattice, the support check and terrain height queries all work on these
planar patches instead of the tessellated triangles, so they do not depend on
the mesh resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .primitives import FLOOR_SIZE, PrimitiveInstance, ShapeClass


@dataclass(frozen=True, eq=False)
class StepFace:
    """A planar rectangle or ellipse in world frame.

    Points on the face are ``center + a*u + b*v`` with ``|a| <= half_u`` and
    ``|b| <= half_v`` (rectangle) or ``(a/half_u)^2 + (b/half_v)^2 <= 1``
    (ellipse).
    """

    owner_id: int
    center: np.ndarray
    u: np.ndarray
    v: np.ndarray
    half_u: float
    half_v: float
    elliptic: bool = False

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.u, self.v)

    @property
    def area(self) -> float:
        if self.elliptic:
            return math.pi * self.half_u * self.half_v
        return 4.0 * self.half_u * self.half_v

    def to_face(self, p) -> np.ndarray:
        """(a, b, offset-along-normal) coordinates of world points, shape (..., 3)."""
        d = np.asarray(p, dtype=float) - self.center
        return np.stack([d @ self.u, d @ self.v, d @ self.normal], axis=-1)

    def from_face(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        return self.center + a * self.u + b * self.v

    def contains_ab(self, a, b, tol: float = 1e-9) -> np.ndarray:
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if self.elliptic:
            return (a / self.half_u) ** 2 + (b / self.half_v) ** 2 <= 1.0 + tol
        return (np.abs(a) <= self.half_u + tol) & (np.abs(b) <= self.half_v + tol)

    def edge_distance(self, a, b) -> np.ndarray:
        """Distance from in-face points to the boundary (approximate for ellipses)."""
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if not self.elliptic:
            return np.minimum(self.half_u - np.abs(a), self.half_v - np.abs(b))
        # scale the normalized radial slack by the smaller semi-axis; exact for circles
        rho = np.sqrt((a / self.half_u) ** 2 + (b / self.half_v) ** 2)
        return (1.0 - rho) * min(self.half_u, self.half_v)

    def height_at(self, x, y) -> np.ndarray:
        """z of the face plane above (x, y); NaN where the point is outside the face."""
        n = self.normal
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if abs(n[2]) < 1e-12:
            return np.full(np.broadcast(x, y).shape, np.nan)
        z = self.center[2] - (n[0] * (x - self.center[0]) + n[1] * (y - self.center[1])) / n[2]
        pts = np.stack(np.broadcast_arrays(x, y, z), axis=-1)
        ab = self.to_face(pts)
        return np.where(self.contains_ab(ab[..., 0], ab[..., 1]), z, np.nan)

    def distance_to_plane(self, p) -> np.ndarray:
        return self.to_face(p)[..., 2]


def step_face(instance: PrimitiveInstance) -> StepFace | None:
    """The steppable face of ``instance`` or None for classes without one."""
    shape, p, pose = instance.shape, instance.params, instance.pose
    R, t = pose.rotation(), pose.position
    if shape is ShapeClass.FLOOR:
        half = FLOOR_SIZE / 2
        return StepFace(instance.id, t.copy(), R[:, 0].copy(), R[:, 1].copy(), half, half)
    if shape is ShapeClass.CUBOID:
        c = t + R @ np.array([0.0, 0.0, p["height"] / 2])
        return StepFace(instance.id, c, R[:, 0].copy(), R[:, 1].copy(), p["length"] / 2, p["width"] / 2)
    if shape is ShapeClass.CYLINDER:
        c = t + R @ np.array([0.0, 0.0, p["height"] / 2])
        return StepFace(instance.id, c, R[:, 0].copy(), R[:, 1].copy(), p["radius_x"], p["radius_y"], elliptic=True)
    if shape is ShapeClass.RAMP:
        # the incline runs from the low back edge to the high front edge through the local origin
        slope = np.array([p["length"], 0.0, p["height"]])
        half_u = float(np.linalg.norm(slope)) / 2
        return StepFace(instance.id, t.copy(), R @ (slope / (2 * half_u)), R[:, 1].copy(), half_u, p["width"] / 2)
    return None


def surface_height(faces, x, y) -> np.ndarray:
    """Highest face under each (x, y); -inf where no face covers the point."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    best = np.full(np.broadcast(x, y).shape, -np.inf)
    for f in faces:
        z = f.height_at(x, y)
        best = np.where(np.isfinite(z) & (z > best), z, best)
    return best
