"""Convenience wiring: scene to torso path, lattice, graph and plan."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry.faces import surface_height
from .graph import GraphConfig, ModeGraph, build_graph, start_mode
from .lattice import DEFAULT_RESOLUTION, FootholdLattice, build_lattice
from .search import edge_costs, search
from .types import GAIT_ORDER, NOMINAL_COM_HEIGHT, Mode, PlanResult, TorsoPath
from .weights import DEFAULT_LAMBDA, MaskContext


@dataclass(frozen=True)
class PlannerConfig:
    resolution: float = DEFAULT_RESOLUTION
    lam: tuple = DEFAULT_LAMBDA
    foot_radius: float = 0.02
    graph: GraphConfig = field(default_factory=GraphConfig)
    path_spacing: float = 0.10


def torso_path(scene, start_xy, goal_xyz, spacing: float = 0.10, faces=None) -> TorsoPath:
    """Straight guide from start to goal following the known terrain height.

    Samples where no known face lies below the line are filled by linear
    interpolation between covered samples.
    """
    sx, sy = start_xy
    gx, gy, gz = goal_xyz
    length = math.hypot(gx - sx, gy - sy)
    n = max(2, int(math.ceil(length / spacing)) + 1)
    t = np.linspace(0.0, 1.0, n)
    x, y = sx + t * (gx - sx), sy + t * (gy - sy)
    faces = scene.step_faces(known_only=True) if faces is None else faces
    hgt = surface_height(faces, x, y)
    known = np.isfinite(hgt)
    if known.any():
        hgt = np.interp(t, t[known], hgt[known])
    else:
        hgt = np.full(n, gz - NOMINAL_COM_HEIGHT)
    z = hgt + NOMINAL_COM_HEIGHT
    z[-1] = gz
    if length < 1e-9:
        # degenerate: a short segment along the start heading keeps the path valid
        yaw = scene.start.yaw
        x = np.array([sx, sx + 1e-3 * math.cos(yaw)])
        y = np.array([sy, sy + 1e-3 * math.sin(yaw)])
        z = np.array([z[0], z[0]])
    return TorsoPath(np.column_stack([x, y, z]))


@dataclass
class PlanningProblem:
    lattice: FootholdLattice
    graph: ModeGraph
    start: Mode
    path: TorsoPath


def prepare(scene, config: PlannerConfig | None = None, start: Mode | None = None, goal=None, lattice=None, faces=None) -> PlanningProblem:
    """Lattice, guide path and graph for planning from ``start`` (default: scene start pose)."""
    cfg = config or PlannerConfig()
    goal = goal or scene.goal
    lat = lattice if lattice is not None else build_lattice(scene, cfg.resolution)
    if start is None:
        st = scene.start
        start = start_mode(lat, st.x, st.y, st.yaw, GAIT_ORDER[0], cfg.graph.snap_radius)
    c = start.com()
    path = torso_path(scene, (c[0], c[1]), goal.center, cfg.path_spacing, faces)
    # the path begins at the actual start CoM height
    wp = path.waypoints.copy()
    wp[0, 2] = c[2]
    path = TorsoPath(wp)
    graph = build_graph(lat, start, goal, path, cfg.graph)
    return PlanningProblem(lat, graph, start, path)


def plan(problem: PlanningProblem, mask_ctx: MaskContext | None, experience=None, lam=DEFAULT_LAMBDA) -> PlanResult:
    costs = edge_costs(problem.graph, mask_ctx, experience, lam)
    return search(problem.graph, costs)
