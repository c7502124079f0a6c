"""Independent reference implementations used as test oracles.

Nothing here imports the code under test beyond plain data types, so a bug in
the package cannot hide behind the same bug in its oracle.
"""

from __future__ import annotations

import math

import numpy as np

STEPPABLE, PASSABLE, NON_PASSABLE = 1, 2, 3


def rule_table_labels(shape: str, params: dict, pose_z: float, normals: np.ndarray, h_max: float) -> np.ndarray:
    """Per-triangle labels from the label rules, identifying the walkable face by its upward normal."""
    n = len(normals)
    if shape == "floor":
        return np.full(n, STEPPABLE)
    if shape in ("cuboid", "ramp", "cylinder"):
        wall = NON_PASSABLE if params["height"] > h_max else PASSABLE
        up = normals[:, 2] > 1e-6
        return np.where(up, STEPPABLE, wall)
    if shape == "sphere":
        return np.full(n, NON_PASSABLE if 2 * params["radius"] > h_max else PASSABLE)
    if shape == "semisphere":
        return np.full(n, NON_PASSABLE if params["radius"] > h_max else PASSABLE)
    if shape in ("pipe", "pole", "tube"):
        return np.full(n, NON_PASSABLE if pose_z > h_max else PASSABLE)
    raise ValueError(shape)


def rotation_zyx(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """R = Rz(yaw) Ry(pitch) Rx(roll), built from elementary rotations."""
    cr, sr, cp, sp, cy, sy = (math.cos(roll), math.sin(roll), math.cos(pitch), math.sin(pitch), math.cos(yaw), math.sin(yaw))
    Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def homogeneous_projection(p, fx, fy, cx, cy, R, t):
    """(u, v, w) from the explicit 3x4 projection matrix K [R | t]."""
    P = np.array([[fx, 0, cx], [0, fy, cy], [0, 0, 1]], dtype=float) @ np.hstack([np.asarray(R), np.asarray(t).reshape(3, 1)])
    x, y, w = P @ np.append(np.asarray(p, dtype=float), 1.0)
    return x / w, y / w, w


def brute_force_hit(origin, direction, tris: np.ndarray):
    """Nearest hit parameter and triangle index over every triangle (two-sided Moller-Trumbore)."""
    best_t, best_i = math.inf, -1
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    for i, (a, b, c) in enumerate(tris):
        e1, e2 = b - a, c - a
        pvec = np.cross(d, e2)
        det = e1 @ pvec
        if abs(det) < 1e-14:
            continue
        inv = 1.0 / det
        s = o - a
        u = (s @ pvec) * inv
        if u < 0.0 or u > 1.0:
            continue
        q = np.cross(s, e1)
        v = (d @ q) * inv
        if v < 0.0 or u + v > 1.0:
            continue
        t = (e2 @ q) * inv
        if 1e-12 < t < best_t:
            best_t, best_i = t, i
    return best_t, best_i


def euler_characteristic(triangles: np.ndarray) -> int:
    tris = np.asarray(triangles)
    edges = set()
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((min(u, v), max(u, v)))
    return len(np.unique(tris)) - len(edges) + len(tris)


def point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(x, dtype=float) for x in (p, a, b))
    ab = b - a
    den = ab @ ab
    t = 0.0 if den == 0 else min(1.0, max(0.0, (p - a) @ ab / den))
    return float(np.linalg.norm(p - a - t * ab))


def polyline_distance(p, pts) -> float:
    return min(point_segment_distance(p, a, b) for a, b in zip(pts[:-1], pts[1:]))
