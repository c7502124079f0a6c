"""Layered mode-transition graph over lattice footholds.

Vertices are partial stances (three feet in contact, one lifted) tagged with
a layer index, so the graph is a DAG: layer k holds the stances reachable
after k single-foot transitions. Following the crawl gait each layer swings
one foot, and the landing candidates for that foot are the few lattice points
closest to where a torso walking along the guide path would put it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import FootholdLattice
from .types import FEET, GAIT_ORDER, NOMINAL_COM_HEIGHT, NOMINAL_OFFSETS, FootId, Mode, TorsoPath, TransitionEdge, nominal_stance


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class GraphConfig:
    stride: float = 0.20
    candidates: int = 3
    window_long: float = 0.15
    window_lat: float = 0.10
    reach_long: float = 0.30
    reach_lat: float = 0.15
    reach_vert: float = 0.16
    min_separation: float = 0.08
    snap_radius: float = 0.15
    extra_layers: int = 4

    def __post_init__(self):
        if not self.stride > 0:
            raise ValueError("stride must be positive")
        if self.candidates < 1:
            raise ValueError("need at least one landing candidate per layer")


@dataclass(frozen=True, eq=False)
class ModeGraph:
    lattice: FootholdLattice
    keys: np.ndarray  # (V, 4) lattice index per foot
    layer: np.ndarray  # (V,)
    swing: np.ndarray  # (V,) lifted foot
    edge_src: np.ndarray  # (E,)
    edge_dst: np.ndarray  # (E,)
    edge_foot: np.ndarray  # (E,) landing foot
    is_goal: np.ndarray  # (V,) bool
    torso_path: TorsoPath
    goal: object

    @property
    def n_vertices(self) -> int:
        return int(self.keys.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edge_src.shape[0])

    def positions(self, v) -> np.ndarray:
        return self.lattice.points[self.keys[v]]

    def com(self, v=None) -> np.ndarray:
        keys = self.keys if v is None else self.keys[v]
        return self.lattice.points[keys].mean(axis=-2) + np.array([0.0, 0.0, NOMINAL_COM_HEIGHT])

    def mode(self, v: int) -> Mode:
        k = self.keys[v]
        return Mode(tuple(map(tuple, self.lattice.points[k])), tuple(self.lattice.owners[k]), FootId(int(self.swing[v])))

    def edge(self, e: int) -> TransitionEdge:
        return TransitionEdge(self.mode(int(self.edge_src[e])), self.mode(int(self.edge_dst[e])), FootId(int(self.edge_foot[e])))

    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR (offsets, edge ids) of outgoing edges, edges sorted by id within a vertex."""
        cached = self.__dict__.get("_adj")
        if cached is None:
            order = np.argsort(self.edge_src, kind="stable")
            counts = np.bincount(self.edge_src, minlength=self.n_vertices)
            offsets = np.concatenate([[0], np.cumsum(counts)])
            cached = (offsets, order)
            object.__setattr__(self, "_adj", cached)
        return cached


def _rot(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


def snap_stance(lattice: FootholdLattice, x: float, y: float, yaw: float, radius: float, side: str) -> np.ndarray:
    """Lattice indices nearest the nominal stance at (x, y, yaw); GraphError if a foot has none near."""
    if len(lattice) == 0:
        raise GraphError(f"{side} stance unreachable in lattice: lattice is empty")
    nominal = nominal_stance(x, y, yaw)
    d, idx = lattice.tree().query(nominal)
    bad = [FEET[i].name for i in range(4) if not d[i] <= radius]
    if bad:
        raise GraphError(f"{side} stance unreachable in lattice: no foothold within {radius} m for {', '.join(bad)}")
    return np.asarray(idx, dtype=np.int64)


def start_mode(lattice: FootholdLattice, x: float, y: float, yaw: float, swing: FootId = GAIT_ORDER[0], snap_radius: float = 0.15) -> Mode:
    idx = snap_stance(lattice, x, y, yaw, snap_radius, "start")
    return Mode(tuple(map(tuple, lattice.points[idx])), tuple(lattice.owners[idx]), swing)


def _select_candidates(pts_xy: np.ndarray, target: np.ndarray, yaw: float, cfg: GraphConfig, idx_pool: np.ndarray) -> np.ndarray:
    """Nearest point to ``target`` then farthest-point picks inside the window."""
    if idx_pool.size == 0:
        return idx_pool
    R = _rot(yaw)
    local = (pts_xy[idx_pool] - target) @ R  # (long, lat)
    inwin = (np.abs(local[:, 0]) <= cfg.window_long) & (np.abs(local[:, 1]) <= cfg.window_lat)
    pool = idx_pool[inwin]
    if pool.size == 0:
        inreach = (np.abs(local[:, 0]) <= cfg.reach_long) & (np.abs(local[:, 1]) <= cfg.reach_lat)
        pool = idx_pool[inreach]
        if pool.size == 0:
            return pool
    d_target = np.linalg.norm(pts_xy[pool] - target, axis=1)
    chosen = [int(pool[np.lexsort((pool, d_target))[0]])]
    min_d = np.linalg.norm(pts_xy[pool] - pts_xy[chosen[0]], axis=1)
    while len(chosen) < cfg.candidates:
        j = int(np.lexsort((pool, -min_d))[0])
        if min_d[j] <= 1e-9:
            break
        chosen.append(int(pool[j]))
        min_d = np.minimum(min_d, np.linalg.norm(pts_xy[pool] - pts_xy[pool[j]], axis=1))
    return np.array(chosen, dtype=np.int64)


def build_graph(lattice: FootholdLattice, start: Mode, goal, torso_path: TorsoPath, config: GraphConfig | None = None) -> ModeGraph:
    """Expand layers from ``start`` until the torso path is exhausted."""
    cfg = config or GraphConfig()
    if len(lattice) == 0:
        raise GraphError("lattice is empty")
    lattice, start_idx = lattice.with_points(np.array(start.stance), start.objects)
    end_yaw = float(torso_path.heading_at(torso_path.length))
    snap_stance(lattice, float(goal.center[0]), float(goal.center[1]), end_yaw, cfg.snap_radius, "goal")

    pts = lattice.points
    pts_xy = pts[:, :2]
    s_end = torso_path.length
    s0 = float(torso_path.project(start.com())[0])
    quarter = cfg.stride / 4
    n_layers = max(0, math.ceil(max(0.0, s_end - s0) / quarter)) + cfg.extra_layers
    degenerate = min(cfg.reach_long, cfg.reach_lat, cfg.reach_vert) <= 0

    keys = [start_idx.copy()]
    layer = [0]
    swing = [int(start.swing_foot)]
    goal_c, goal_r = np.asarray(goal.center, dtype=float), float(goal.radius)

    def in_goal(k):
        return np.linalg.norm(pts[k].mean(axis=0) + [0, 0, NOMINAL_COM_HEIGHT] - goal_c) <= goal_r

    is_goal = [bool(in_goal(start_idx))]
    e_src, e_dst, e_foot = [], [], []
    frontier = [0] if not is_goal[0] else []
    phase0 = GAIT_ORDER.index(start.swing_foot)
    all_idx = np.arange(len(lattice), dtype=np.int64)

    for k in range(n_layers):
        if not frontier or degenerate:
            break
        foot = int(GAIT_ORDER[(phase0 + k) % 4])
        nxt = int(GAIT_ORDER[(phase0 + k + 1) % 4])
        s_k = min(s0 + (k + 1) * quarter, s_end)
        s_t = min(s_k + cfg.stride / 2, s_end)
        yaw = float(torso_path.heading_at(s_t))
        off = np.array(NOMINAL_OFFSETS[FootId(foot)])
        target = torso_path.point_at(s_t)[:2] + _rot(yaw) @ off
        near = lattice.tree().query_ball_point(target, math.hypot(cfg.reach_long, cfg.reach_lat))
        pool = np.array(sorted(near), dtype=np.int64) if near else all_idx[:0]
        cand = _select_candidates(pts_xy, target, yaw, cfg, pool)
        if cand.size == 0:
            break
        src = np.array(frontier, dtype=np.int64)
        src_keys = np.array([keys[v] for v in src])  # (m, 4)
        m, c = len(src), len(cand)
        new_keys = np.repeat(src_keys, c, axis=0)
        new_keys[:, foot] = np.tile(cand, m)
        src_rep = np.repeat(src, c)

        # reach rectangle about the source torso, heading of the guide path
        src_pts = pts[src_keys]  # (m, 4, 3)
        centroid = src_pts[:, :, :2].mean(axis=1)
        nominal = centroid + _rot(yaw) @ off
        land = pts[new_keys[:, foot]]
        rel = (land[:, :2] - np.repeat(nominal, c, axis=0)) @ _rot(yaw)
        others = [f for f in range(4) if f != foot]
        other_pts = np.repeat(src_pts[:, others, :], c, axis=0)
        dz = land[:, 2] - other_pts[:, :, 2].mean(axis=1)
        sep = np.linalg.norm(other_pts[:, :, :2] - land[:, None, :2], axis=2).min(axis=1)
        moved = new_keys[:, foot] != np.repeat(src_keys[:, foot], c)
        ok = (
            (np.abs(rel[:, 0]) <= cfg.reach_long)
            & (np.abs(rel[:, 1]) <= cfg.reach_lat)
            & (np.abs(dz) <= cfg.reach_vert)
            & (sep >= cfg.min_separation)
            & moved
        )
        index = {}
        next_frontier = []
        for row in np.flatnonzero(ok):
            kk = tuple(new_keys[row])
            v = index.get(kk)
            if v is None:
                v = len(keys)
                index[kk] = v
                keys.append(new_keys[row])
                layer.append(k + 1)
                swing.append(nxt)
                g = bool(in_goal(new_keys[row]))
                is_goal.append(g)
                if not g:
                    next_frontier.append(v)
            e_src.append(int(src_rep[row]))
            e_dst.append(v)
            e_foot.append(foot)
        frontier = next_frontier

    return ModeGraph(
        lattice=lattice,
        keys=np.array(keys, dtype=np.int64).reshape(-1, 4),
        layer=np.array(layer, dtype=np.int64),
        swing=np.array(swing, dtype=np.int64),
        edge_src=np.array(e_src, dtype=np.int64),
        edge_dst=np.array(e_dst, dtype=np.int64),
        edge_foot=np.array(e_foot, dtype=np.int64),
        is_goal=np.array(is_goal, dtype=bool),
        torso_path=torso_path,
        goal=goal,
    )
