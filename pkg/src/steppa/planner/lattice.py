"""Candidate footholds sampled on the steppable faces of known objects."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from ..geometry.faces import StepFace, step_face
from ..geometry.mesh import local_mesh

DEFAULT_RESOLUTION = 0.05
# lift above the face before testing whether another object covers the point
COVER_PROBE = 1e-3


class LatticeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FootholdLattice:
    points: np.ndarray  # (n, 3)
    owners: np.ndarray  # (n,) object id of each point
    resolution: float
    faces: tuple = ()

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def tree(self) -> cKDTree:
        cached = self.__dict__.get("_tree")
        if cached is None:
            cached = cKDTree(self.points[:, :2])
            object.__setattr__(self, "_tree", cached)
        return cached

    def face_of(self, owner: int) -> StepFace:
        for f in self.faces:
            if f.owner_id == owner:
                return f
        raise KeyError(owner)

    def subset(self, idx) -> FootholdLattice:
        idx = np.asarray(idx, dtype=np.int64)
        return FootholdLattice(self.points[idx], self.owners[idx], self.resolution, self.faces)

    def with_points(self, points, owners) -> tuple[FootholdLattice, np.ndarray]:
        """Lattice extended by ``points`` (reused where they coincide); returns their indices."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        idx = np.empty(len(points), dtype=np.int64)
        new_pts, new_own = [], []
        n = len(self)
        for k, (p, o) in enumerate(zip(points, owners)):
            if n:
                d, j = self.tree().query(p[:2])
                if d < 1e-9 and abs(self.points[j, 2] - p[2]) < 1e-9 and self.owners[j] == o:
                    idx[k] = j
                    continue
            idx[k] = n + len(new_pts)
            new_pts.append(p)
            new_own.append(int(o))
        if not new_pts:
            return self, idx
        lat = FootholdLattice(
            np.vstack([self.points, np.array(new_pts)]),
            np.concatenate([self.owners, np.array(new_own, dtype=np.int64)]),
            self.resolution,
            self.faces,
        )
        return lat, idx


def face_grid(face: StepFace, resolution: float) -> np.ndarray:
    """Centred grid on ``face`` keeping points at least resolution/2 from the boundary."""
    axes = []
    for half in (face.half_u, face.half_v):
        n = int(np.floor(2 * half / resolution + 1e-9))
        axes.append((np.arange(n) - (n - 1) / 2) * resolution if n > 0 else np.zeros(0))
    a, b = np.meshgrid(axes[0], axes[1], indexing="ij")
    a, b = a.ravel(), b.ravel()
    keep = face.contains_ab(a, b, tol=0.0) & (face.edge_distance(a, b) >= resolution / 2 - 1e-9)
    a, b = a[keep], b[keep]
    if a.size == 0:
        a, b = np.zeros(1), np.zeros(1)
    return face.from_face(a, b)


def _solid_hull(instance, resolution_facets: int = 16):
    v, _, _ = local_mesh(instance, resolution_facets, solid=True)
    world = v @ instance.pose.rotation().T + instance.pose.position
    return ConvexHull(world).equations


def build_lattice(scene, resolution: float = DEFAULT_RESOLUTION, region=None, objects=None) -> FootholdLattice:
    """Foothold candidates on every steppable face of the known objects.

    ``objects`` optionally restricts the ids considered; ``region`` is a
    callable mapping (n, 3) points to a boolean keep mask.
    """
    if not resolution > 0:
        raise LatticeError("lattice resolution must be positive")
    known = [p for p in scene.known_primitives() if objects is None or p.id in objects]
    faces = [(p, f) for p, f in ((p, step_face(p)) for p in known) if f is not None]
    if not faces:
        raise LatticeError("scene has no steppable faces on known objects")
    hulls = {p.id: _solid_hull(p, scene.resolution) for p, _ in faces if p.shape.value != "floor"}
    pts, owners = [], []
    for p, f in faces:
        g = face_grid(f, resolution)
        probe = g + COVER_PROBE * f.normal
        covered = np.zeros(len(g), dtype=bool)
        for oid, eq in hulls.items():
            if oid == p.id:
                continue
            d = probe @ eq[:, :3].T + eq[:, 3]
            covered |= np.all(d < 0, axis=1)
        g = g[~covered]
        if region is not None and len(g):
            g = g[np.asarray(region(g), dtype=bool)]
        pts.append(g)
        owners.append(np.full(len(g), p.id, dtype=np.int64))
    points = np.vstack(pts) if pts else np.zeros((0, 3))
    return FootholdLattice(points, np.concatenate(owners), resolution, tuple(f for _, f in faces))
