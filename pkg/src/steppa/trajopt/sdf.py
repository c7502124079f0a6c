"""Signed distance to obstacles for the swing-foot collision constraint."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull


@dataclass(frozen=True, eq=False)
class SphereObstacle:
    owner_id: int
    center: np.ndarray
    radius: float

    def sdf(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Signed distance and its gradient for points of shape (n, 3)."""
        d = p - self.center
        r = np.linalg.norm(d, axis=1)
        safe = np.where(r > 1e-12, r, 1.0)
        grad = np.where((r > 1e-12)[:, None], d / safe[:, None], np.array([0.0, 0.0, 1.0]))
        return r - self.radius, grad


def closest_point_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Closest points of each triangle to each point; returns (n_points, n_tris, 3).

    Region-based method of Ericson, Real-Time Collision Detection, 5.1.5.
    """
    p = p[:, None, :]
    ab, ac = (b - a)[None], (c - a)[None]
    ap = p - a[None]
    d1 = (ab * ap).sum(-1)
    d2 = (ac * ap).sum(-1)
    bp = p - b[None]
    d3 = (ab * bp).sum(-1)
    d4 = (ac * bp).sum(-1)
    cp = p - c[None]
    d5 = (ab * cp).sum(-1)
    d6 = (ac * cp).sum(-1)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    A, B, C = np.broadcast_to(a[None], ap.shape), np.broadcast_to(b[None], ap.shape), np.broadcast_to(c[None], ap.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v_in = vb / denom
        w_in = vc / denom
        out = A + ab * v_in[..., None] + ac * w_in[..., None]
        # edge regions
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    e_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    e_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    e_bc = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    # later assignments take precedence, mirroring the early returns of the scalar version
    out = np.where(e_bc[..., None], B + (C - B) * t_bc[..., None], out)
    out = np.where(e_ac[..., None], A + ac * t_ac[..., None], out)
    out = np.where(((d6 >= 0) & (d5 <= d6))[..., None], C, out)
    out = np.where(e_ab[..., None], A + ab * t_ab[..., None], out)
    out = np.where(((d3 >= 0) & (d4 <= d3))[..., None], B, out)
    out = np.where(((d1 <= 0) & (d2 <= 0))[..., None], A, out)
    return out


@dataclass(frozen=True, eq=False)
class MeshObstacle:
    """Non-passable triangles of a mesh; inside is decided by the convex hull."""

    owner_id: int
    tris: np.ndarray  # (m, 3, 3)
    hull: np.ndarray  # (k, 4) facet equations

    @classmethod
    def from_mesh(cls, mesh, np_mask=None) -> MeshObstacle:
        tv = mesh.triangle_vertices()
        tris = tv if np_mask is None else tv[np_mask]
        return cls(mesh.owner_id, tris, ConvexHull(mesh.vertices).equations)

    @property
    def centroid(self) -> np.ndarray:
        return self.tris.reshape(-1, 3).mean(axis=0)

    def sdf(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = closest_point_on_triangles(p, self.tris[:, 0], self.tris[:, 1], self.tris[:, 2])
        d = p[:, None, :] - q
        dist = np.linalg.norm(d, axis=2)
        j = dist.argmin(axis=1)
        i = np.arange(len(p))
        dmin = dist[i, j]
        vec = d[i, j]
        inside = np.all(p @ self.hull[:, :3].T + self.hull[:, 3] < 0, axis=1)
        sign = np.where(inside, -1.0, 1.0)
        safe = np.where(dmin > 1e-12, dmin, 1.0)
        grad = np.where((dmin > 1e-12)[:, None], vec / safe[:, None], np.array([0.0, 0.0, 1.0]))
        return sign * dmin, sign[:, None] * grad


def obstacle_centroid(obs) -> np.ndarray:
    return obs.center if isinstance(obs, SphereObstacle) else obs.centroid
