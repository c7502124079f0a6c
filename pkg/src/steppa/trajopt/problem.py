"""Reduced transition problem: point-mass CoM, three stance feet and one swinging foot."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry.faces import step_face
from ..geometry.primitives import ShapeClass, SteppabilityLabel
from ..planner.types import FEET, Mode, NOMINAL_COM_HEIGHT
from .sdf import MeshObstacle, SphereObstacle, obstacle_centroid

GRAVITY = 9.81


class TransitionError(ValueError):
    pass


@dataclass(frozen=True)
class TOConfig:
    horizon: int = 20
    dt: float = 0.05
    mass: float = 12.0
    gravity: float = GRAVITY
    mu: float = 0.7
    facets: int = 4
    r_act: float = 0.5
    clearance: float = 0.01
    # state weights (CoM position, CoM velocity, swing foot) on running and terminal knots
    Q: tuple = (10.0, 1.0, 10.0)
    Qf: tuple = (1000.0, 100.0, 1000.0)
    # input weights (contact force, swing-foot velocity)
    R: tuple = (1e-8, 1e-3)
    landing_slack: float = 0.02
    swing_apex: float = 0.08
    apex_gain: float = 0.5
    rho0: float = 1e2
    rho_factor: float = 10.0
    rounds: int = 5
    max_iter: int = 500
    tol_dynamics: float = 1e-4
    tol_terminal: float = 1e-4
    tol_collision: float = 1e-4
    tol_friction: float = 1e-6

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.mu > 0:
            raise ValueError("mu must be > 0")
        if self.facets < 3:
            raise ValueError("the friction pyramid needs at least 3 facets")
        if min(self.Q + self.Qf + self.R) <= 0:
            raise ValueError("Q, Qf and R entries must be positive")


def tangent_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = n / np.linalg.norm(n)
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = ref - (ref @ n) * n
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


def friction_generators(n: np.ndarray, mu: float, facets: int) -> np.ndarray:
    """(3, F) edge rays of the pyramid whose facets sit at distance mu from the normal axis."""
    n = n / np.linalg.norm(n)
    t1, t2 = tangent_basis(n)
    phi = (2 * np.arange(facets) + 1) * math.pi / facets
    rad = mu / math.cos(math.pi / facets)
    return (n[:, None] + rad * (np.cos(phi)[None] * t1[:, None] + np.sin(phi)[None] * t2[:, None]))


def facet_directions(facets: int) -> np.ndarray:
    theta = 2 * np.arange(facets) * math.pi / facets
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


@dataclass(frozen=True, eq=False)
class TransitionProblem:
    source: Mode
    dest: Mode
    config: TOConfig
    swing_foot: int
    stance_feet: tuple
    stance_pos: np.ndarray  # (3, 3)
    stance_normals: np.ndarray  # (3, 3)
    generators: np.ndarray  # (3, 3, F)
    liftoff: np.ndarray
    landing: np.ndarray
    landing_normal: np.ndarray
    landing_tangents: np.ndarray  # (3, 2)
    com0: np.ndarray
    com_des: np.ndarray  # (N+1, 3)
    foot_des: np.ndarray  # (N+1, 3)
    obstacles: tuple = field(default_factory=tuple)

    @property
    def N(self) -> int:
        return self.config.horizon

    @property
    def force_scale(self) -> float:
        """Decision-variable scale: one third of the body weight per generator unit."""
        return self.config.mass * self.config.gravity / 3.0

    @property
    def n_vars(self) -> int:
        N, F = self.N, self.config.facets
        return 4 * N * 3 + N * 3 * F + 2


def _face_normal(scene, obj_id: int) -> np.ndarray:
    try:
        f = step_face(scene.primitive(obj_id))
    except KeyError:
        f = None
    return np.array([0.0, 0.0, 1.0]) if f is None else f.normal / np.linalg.norm(f.normal)


def _distance_to_segment(p, a, b) -> float:
    ab = b - a
    L2 = float(ab @ ab)
    t = 0.0 if L2 < 1e-18 else float(np.clip((p - a) @ ab / L2, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def active_obstacles(scene, a: np.ndarray, b: np.ndarray, r_act: float) -> list:
    """Non-passable meshes whose centroid lies within ``r_act`` of the segment a-b."""
    np_label = int(SteppabilityLabel.NON_PASSABLE)
    shapes = {p.id: p for p in scene.primitives}
    out = []
    for mesh in scene.all_meshes():
        mask = mesh.face_labels == np_label
        if not mask.any():
            continue
        prim = shapes.get(mesh.owner_id)
        if prim is not None and prim.shape is ShapeClass.SPHERE:
            obs = SphereObstacle(prim.id, prim.pose.position, prim.params["radius"])
        else:
            obs = MeshObstacle.from_mesh(mesh, mask)
        if _distance_to_segment(obstacle_centroid(obs), a, b) <= r_act:
            out.append(obs)
    return out


def _swing_profile(p0: np.ndarray, p1: np.ndarray, N: int, cfg: TOConfig) -> np.ndarray:
    tau = np.linspace(0.0, 1.0, N + 1)[:, None]
    path = p0 + tau * (p1 - p0)
    dxy = float(np.linalg.norm((p1 - p0)[:2]))
    apex = min(cfg.swing_apex, cfg.apex_gain * dxy)
    path[:, 2] += apex * 4.0 * tau[:, 0] * (1.0 - tau[:, 0])
    return path


def build_problem(source: Mode, dest: Mode, scene, config: TOConfig | None = None) -> TransitionProblem:
    cfg = config or TOConfig()
    f = source.swing_foot
    src, dst = source.positions, dest.positions
    moved = [foot for foot in FEET if not np.allclose(src[foot], dst[foot], atol=1e-9)]
    if moved and moved != [f]:
        raise TransitionError(f"modes are not adjacent: feet {[m.name for m in moved]} move, swing foot is {f.name}")
    stance = source.contact_feet
    normals = np.array([_face_normal(scene, source.objects[s]) for s in stance])
    gens = np.array([friction_generators(n, cfg.mu, cfg.facets) for n in normals])
    n_land = _face_normal(scene, dest.objects[f])
    t1, t2 = tangent_basis(n_land)
    N = cfg.horizon
    com0 = source.com()
    com1 = dest.com()
    tau = np.linspace(0.0, 1.0, N + 1)[:, None]
    com_des = com0 + tau * (com1 - com0)
    foot_des = _swing_profile(src[f], dst[f], N, cfg)
    obstacles = tuple(active_obstacles(scene, com0, com1, cfg.r_act)) if scene is not None else ()
    return TransitionProblem(
        source=source,
        dest=dest,
        config=cfg,
        swing_foot=int(f),
        stance_feet=tuple(int(s) for s in stance),
        stance_pos=src[list(stance)],
        stance_normals=normals,
        generators=gens,
        liftoff=src[f].copy(),
        landing=dst[f].copy(),
        landing_normal=n_land,
        landing_tangents=np.column_stack([t1, t2]),
        com0=com0,
        com_des=com_des,
        foot_des=foot_des,
        obstacles=obstacles,
    )


__all__ = ["NOMINAL_COM_HEIGHT", "TOConfig", "TransitionError", "TransitionProblem", "build_problem", "friction_generators"]
