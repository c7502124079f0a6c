"""Tessellation of primitives into triangle meshes and the steppability label policy."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .primitives import (
    CURVED_CLASSES,
    FLOOR_SIZE,
    FLOOR_THICKNESS,
    ROD_CLASSES,
    TOP_FACE_CLASSES,
    LabelPolicyConfig,
    PrimitiveInstance,
    ShapeClass,
    SteppabilityLabel,
)

DEFAULT_RESOLUTION = 16
PIPE_INNER_RATIO = 0.7
UNSET = -1

# face tags
TOP, BOTTOM, SIDE, SURFACE = "top", "bottom", "side", "surface"


class DegenerateGeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LabeledMesh:
    """Triangle mesh in world frame with one label per triangle.

    ``face_tags`` records which logical face of the primitive each triangle
    came from (top, bottom, side, surface); labels are derived from it.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    face_labels: np.ndarray
    owner_id: int
    face_tags: tuple = ()

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def labeled(self) -> bool:
        return bool(np.all(self.face_labels != UNSET))

    def triangle_vertices(self) -> np.ndarray:
        return self.vertices[self.triangles]

    def normals(self) -> np.ndarray:
        tv = self.triangle_vertices()
        n = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def with_labels(self, labels) -> LabeledMesh:
        labels = np.asarray(labels, dtype=np.int8)
        if labels.shape != (self.n_triangles,):
            raise ValueError("one label per triangle required")
        return replace(self, face_labels=labels)


# ---------------------------------------------------------------- local meshes
# Each builder returns (vertices, triangles, tags) in the primitive frame with
# counter-clockwise winding seen from outside.


def _box(lx, ly, lz, center=(0.0, 0.0, 0.0)):
    hx, hy, hz = lx / 2, ly / 2, lz / 2
    v = np.array(
        [
            [-hx, -hy, -hz], [hx, -hy, -hz], [hx, hy, -hz], [-hx, hy, -hz],
            [-hx, -hy, hz], [hx, -hy, hz], [hx, hy, hz], [-hx, hy, hz],
        ]
    ) + np.asarray(center)
    t = [
        (4, 5, 6), (4, 6, 7),
        (0, 2, 1), (0, 3, 2),
        (0, 1, 5), (0, 5, 4),
        (1, 2, 6), (1, 6, 5),
        (2, 3, 7), (2, 7, 6),
        (3, 0, 4), (3, 4, 7),
    ]
    tags = [TOP] * 2 + [BOTTOM] * 2 + [SIDE] * 8
    return v, np.array(t), tags


def _wedge(l, w, h):
    hl, hw, hh = l / 2, w / 2, h / 2
    v = np.array(
        [
            [-hl, -hw, -hh], [hl, -hw, -hh], [hl, hw, -hh], [-hl, hw, -hh],
            [hl, -hw, hh], [hl, hw, hh],
        ]
    )
    t = [(0, 4, 5), (0, 5, 3), (0, 2, 1), (0, 3, 2), (1, 2, 5), (1, 5, 4), (0, 1, 4), (3, 5, 2)]
    tags = [TOP] * 2 + [BOTTOM] * 2 + [SIDE] * 4
    return v, np.array(t), tags


def _elliptic_prism(rx, ry, h, n):
    th = 2 * math.pi * np.arange(n) / n
    ring = np.stack([rx * np.cos(th), ry * np.sin(th)], axis=1)
    bottom = np.column_stack([ring, np.full(n, -h / 2)])
    top = np.column_stack([ring, np.full(n, h / 2)])
    v = np.vstack([bottom, top, [[0, 0, -h / 2], [0, 0, h / 2]]])
    bc, tc = 2 * n, 2 * n + 1
    t, tags = [], []
    for i in range(n):
        j = (i + 1) % n
        t.append((tc, n + i, n + j))
        tags.append(TOP)
    for i in range(n):
        j = (i + 1) % n
        t.append((bc, j, i))
        tags.append(BOTTOM)
    for i in range(n):
        j = (i + 1) % n
        t += [(i, j, n + j), (i, n + j, n + i)]
        tags += [SIDE, SIDE]
    return v, np.array(t), tags


def _annulus_prism(r_out, r_in, h, n):
    th = 2 * math.pi * np.arange(n) / n
    c, s = np.cos(th), np.sin(th)
    ob = np.column_stack([r_out * c, r_out * s, np.full(n, -h / 2)])
    ot = np.column_stack([r_out * c, r_out * s, np.full(n, h / 2)])
    ib = np.column_stack([r_in * c, r_in * s, np.full(n, -h / 2)])
    it = np.column_stack([r_in * c, r_in * s, np.full(n, h / 2)])
    v = np.vstack([ob, ot, ib, it])
    OB, OT, IB, IT = 0, n, 2 * n, 3 * n
    t = []
    for i in range(n):
        j = (i + 1) % n
        t += [(OT + i, OT + j, IT + j), (OT + i, IT + j, IT + i)]  # end cap +z
        t += [(OB + i, IB + j, OB + j), (OB + i, IB + i, IB + j)]  # end cap -z
        t += [(OB + i, OB + j, OT + j), (OB + i, OT + j, OT + i)]  # outer wall
        t += [(IB + i, IT + j, IB + j), (IB + i, IT + i, IT + j)]  # inner wall
    return v, np.array(t), [SURFACE] * len(t)


def _uv_sphere(r, n, hemisphere=False):
    n_lat = n // 2
    rings = n_lat // 2 if hemisphere else n_lat - 1
    th = 2 * math.pi * np.arange(n) / n
    verts = [[0.0, 0.0, r]]
    for j in range(1, rings + 1):
        phi = math.pi * j / n_lat
        rho, z = r * math.sin(phi), r * math.cos(phi)
        if hemisphere and j == rings:
            z = 0.0
        verts += [[rho * math.cos(a), rho * math.sin(a), z] for a in th]
    t, tags = [], []

    def ring(j, i):
        return 1 + (j - 1) * n + (i % n)

    for i in range(n):
        t.append((0, ring(1, i), ring(1, i + 1)))
    for j in range(1, rings):
        for i in range(n):
            t += [(ring(j, i), ring(j + 1, i), ring(j + 1, i + 1)), (ring(j, i), ring(j + 1, i + 1), ring(j, i + 1))]
    tags = [SURFACE] * len(t)
    if hemisphere:
        base = len(verts)
        verts.append([0.0, 0.0, 0.0])
        for i in range(n):
            t.append((base, ring(rings, i + 1), ring(rings, i)))
            tags.append(BOTTOM)
    else:
        bottom = len(verts)
        verts.append([0.0, 0.0, -r])
        for i in range(n):
            t.append((bottom, ring(rings, i + 1), ring(rings, i)))
            tags.append(SURFACE)
    return np.array(verts), np.array(t), tags


def _along_x(v):
    # cyclic permutation: local z axis becomes x (proper rotation)
    return v[:, [2, 0, 1]]


def local_mesh(instance: PrimitiveInstance, resolution: int = DEFAULT_RESOLUTION, solid: bool = False):
    """Vertices, triangles and tags of ``instance`` in its own frame.

    ``solid=True`` returns the convex hull variant (a Pipe becomes a full
    cylinder), used for containment tests.
    """
    shape, p = instance.shape, instance.params
    if shape in CURVED_CLASSES and resolution < 8:
        raise ValueError("resolution must be >= 8 for curved classes")
    if any(val <= 0 for val in p.values()):
        raise DegenerateGeometryError(f"primitive {instance.id}: non-positive dimension in {p}")
    if shape is ShapeClass.CUBOID:
        return _box(p["length"], p["width"], p["height"])
    if shape is ShapeClass.RAMP:
        return _wedge(p["length"], p["width"], p["height"])
    if shape is ShapeClass.CYLINDER:
        return _elliptic_prism(p["radius_x"], p["radius_y"], p["height"], resolution)
    if shape is ShapeClass.SPHERE:
        return _uv_sphere(p["radius"], resolution)
    if shape is ShapeClass.SEMISPHERE:
        return _uv_sphere(p["radius"], resolution, hemisphere=True)
    if shape in ROD_CLASSES:
        r, length = p["radius"], p["length"]
        if shape is ShapeClass.PIPE and not solid:
            v, t, tags = _annulus_prism(r, PIPE_INNER_RATIO * r, length, resolution)
        else:
            v, t, tags = _elliptic_prism(r, r, length, resolution)
            tags = [SURFACE] * len(tags)
        return _along_x(v), t, tags
    if shape is ShapeClass.FLOOR:
        return _box(FLOOR_SIZE, FLOOR_SIZE, FLOOR_THICKNESS, center=(0.0, 0.0, -FLOOR_THICKNESS / 2))
    raise ValueError(f"unknown shape {shape}")


def tessellate(instance: PrimitiveInstance, resolution: int = DEFAULT_RESOLUTION) -> LabeledMesh:
    """World-frame watertight mesh of ``instance``; labels are left unset."""
    v, t, tags = local_mesh(instance, resolution)
    world = v @ instance.pose.rotation().T + instance.pose.position
    return LabeledMesh(
        vertices=world,
        triangles=np.asarray(t, dtype=np.int64),
        face_labels=np.full(len(t), UNSET, dtype=np.int8),
        owner_id=instance.id,
        face_tags=tuple(tags),
    )


def label_for_face(instance: PrimitiveInstance, tag: str, policy: LabelPolicyConfig) -> SteppabilityLabel:
    shape, p, h_max = instance.shape, instance.params, policy.h_max
    if shape is ShapeClass.FLOOR:
        return SteppabilityLabel.STEPPABLE
    if shape in TOP_FACE_CLASSES:
        if tag == TOP:
            return SteppabilityLabel.STEPPABLE
        return SteppabilityLabel.NON_PASSABLE if p["height"] > h_max else SteppabilityLabel.PASSABLE
    if shape is ShapeClass.SPHERE:
        blocked = 2.0 * p["radius"] > h_max
    elif shape is ShapeClass.SEMISPHERE:
        blocked = p["radius"] > h_max
    elif shape in ROD_CLASSES:
        # pose origin is the rod axis centre
        blocked = instance.pose.z > h_max
    else:
        raise ValueError(f"no label policy for {shape}")
    return SteppabilityLabel.NON_PASSABLE if blocked else SteppabilityLabel.PASSABLE


def assign_labels(mesh: LabeledMesh, instance: PrimitiveInstance, policy: LabelPolicyConfig) -> LabeledMesh:
    if mesh.owner_id != instance.id:
        raise ValueError(f"mesh owner {mesh.owner_id} does not match primitive {instance.id}")
    labels = [int(label_for_face(instance, tag, policy)) for tag in mesh.face_tags]
    return mesh.with_labels(labels)


def environment_meshes(height: float = 2.0, thickness: float = 0.05) -> list[LabeledMesh]:
    """Four walls and a ceiling around the floor, all non-passable."""
    half = FLOOR_SIZE / 2
    boxes = [
        ((thickness, FLOOR_SIZE + 2 * thickness, height), (half + thickness / 2, 0.0, height / 2)),
        ((thickness, FLOOR_SIZE + 2 * thickness, height), (-half - thickness / 2, 0.0, height / 2)),
        ((FLOOR_SIZE, thickness, height), (0.0, half + thickness / 2, height / 2)),
        ((FLOOR_SIZE, thickness, height), (0.0, -half - thickness / 2, height / 2)),
        ((FLOOR_SIZE + 2 * thickness, FLOOR_SIZE + 2 * thickness, thickness), (0.0, 0.0, height + thickness / 2)),
    ]
    meshes = []
    for k, (dims, center) in enumerate(boxes):
        v, t, tags = _box(*dims, center=center)
        meshes.append(
            LabeledMesh(
                vertices=v,
                triangles=t.astype(np.int64),
                face_labels=np.full(len(t), int(SteppabilityLabel.NON_PASSABLE), dtype=np.int8),
                owner_id=-(k + 1),
                face_tags=tuple(tags),
            )
        )
    return meshes
