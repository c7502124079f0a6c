"""Scene assembly, validation and serialization."""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import ConvexHull

from .faces import StepFace, step_face, surface_height
from .mesh import DEFAULT_RESOLUTION, LabeledMesh, assign_labels, environment_meshes, local_mesh, tessellate
from .primitives import (
    FLOOR_SIZE,
    TOP_FACE_CLASSES,
    LabelPolicyConfig,
    Pose6D,
    PrimitiveInstance,
    ShapeClass,
    SteppabilityLabel,
    floor_instance,
    sample_primitive,
)

log = logging.getLogger(__name__)

SUPPORT_TOL = 1e-9
# tessellated curved shapes resting on inclines sink by a fraction of a millimetre
PENETRATION_TOL = 2e-3
PLACEMENT_RETRIES = 50
RESAMPLE_EVERY = 10


class SceneError(ValueError):
    pass


class SupportError(SceneError):
    def __init__(self, instance_id: int, detail: str = ""):
        self.instance_id = instance_id
        super().__init__(f"primitive {instance_id} is not resting on a support surface{': ' + detail if detail else ''}")


class InterpenetrationError(SceneError):
    def __init__(self, instance_id: int, other_id: int):
        self.instance_id, self.other_id = instance_id, other_id
        super().__init__(f"primitive {instance_id} interpenetrates primitive {other_id}")


class PlacementError(SceneError):
    pass


class Environment(str, enum.Enum):
    INDOOR = "indoor"
    OUTDOOR = "outdoor"


class PlacementMode(str, enum.Enum):
    CLUSTER = "cluster"
    SCATTER = "scatter"
    MANUAL = "manual"


@dataclass(frozen=True)
class GoalRegion:
    center: tuple = (1.5, 0.0, 0.3)
    radius: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3:
            raise ValueError("goal center must be 3D")
        if not self.radius > 0:
            raise ValueError(f"goal radius must be > 0, got {self.radius}")

    def contains(self, p) -> bool:
        return float(np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(self.center))) <= self.radius

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radius": float(self.radius)}

    @classmethod
    def from_dict(cls, d: dict) -> GoalRegion:
        return cls(center=tuple(d["center"]), radius=float(d["radius"]))


@dataclass(frozen=True)
class StartPose:
    """Planar robot start: torso xy and heading. Feet are placed at the nominal stance."""

    x: float = -1.5
    y: float = 0.0
    yaw: float = 0.0

    def to_dict(self) -> dict:
        return {"x": float(self.x), "y": float(self.y), "yaw": float(self.yaw)}

    @classmethod
    def from_dict(cls, d: dict) -> StartPose:
        return cls(float(d.get("x", -1.5)), float(d.get("y", 0.0)), float(d.get("yaw", 0.0)))


@dataclass(frozen=True, eq=False)
class Scene:
    """Immutable scene version. Modifications return a new Scene."""

    primitives: tuple
    meshes: tuple
    environment: Environment = Environment.OUTDOOR
    goal: GoalRegion = field(default_factory=GoalRegion)
    rng_seed: int = 0
    policy: LabelPolicyConfig = field(default_factory=LabelPolicyConfig)
    resolution: int = DEFAULT_RESOLUTION
    start: StartPose = field(default_factory=StartPose)
    environment_meshes: tuple = ()

    def all_meshes(self) -> list[LabeledMesh]:
        return list(self.meshes) + list(self.environment_meshes)

    def primitive(self, instance_id: int) -> PrimitiveInstance:
        for p in self.primitives:
            if p.id == instance_id:
                return p
        raise KeyError(instance_id)

    def mesh_for(self, instance_id: int) -> LabeledMesh:
        for m in self.meshes:
            if m.owner_id == instance_id:
                return m
        raise KeyError(instance_id)

    def known_primitives(self) -> list[PrimitiveInstance]:
        return [p for p in self.primitives if p.known_to_planner]

    def step_faces(self, known_only: bool = False) -> list[StepFace]:
        faces = []
        for p in self.primitives:
            if known_only and not p.known_to_planner:
                continue
            f = step_face(p)
            if f is not None:
                faces.append(f)
        return faces

    def ground_height(self, x, y, known_only: bool = False) -> np.ndarray:
        return surface_height(self.step_faces(known_only), x, y)

    def next_id(self) -> int:
        return max((p.id for p in self.primitives), default=-1) + 1

    def to_dict(self) -> dict:
        return {
            "seed": int(self.rng_seed),
            "environment": self.environment.value,
            "goal": self.goal.to_dict(),
            "start": self.start.to_dict(),
            "label_policy": {"h_max": self.policy.h_max},
            "resolution": int(self.resolution),
            "primitives": [p.to_dict() for p in self.primitives],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _labeled_mesh(instance: PrimitiveInstance, policy: LabelPolicyConfig, resolution: int) -> LabeledMesh:
    return assign_labels(tessellate(instance, resolution), instance, policy)


def _solid_world_vertices(instance: PrimitiveInstance, resolution: int) -> np.ndarray:
    v, _, _ = local_mesh(instance, resolution, solid=True)
    return v @ instance.pose.rotation().T + instance.pose.position


def _hull_equations(points: np.ndarray) -> np.ndarray:
    return ConvexHull(points).equations


def _inside_count(points: np.ndarray, equations: np.ndarray, tol: float) -> int:
    # a point is inside when it lies below every facet plane by more than tol
    d = points @ equations[:, :3].T + equations[:, 3]
    return int(np.sum(np.all(d < -tol, axis=1)))


def _probe_points(instance: PrimitiveInstance, resolution: int) -> np.ndarray:
    v, t, _ = local_mesh(instance, resolution, solid=True)
    t = np.asarray(t)
    tri = v[t]
    pts = np.vstack([v, tri.mean(axis=1), (tri[:, 0] + tri[:, 1]) / 2, v.mean(axis=0, keepdims=True)])
    return pts @ instance.pose.rotation().T + instance.pose.position


def check_interpenetration(
    instance: PrimitiveInstance, others, resolution: int = DEFAULT_RESOLUTION, tol: float = PENETRATION_TOL
) -> None:
    """Raise InterpenetrationError if ``instance`` overlaps any non-floor primitive in ``others``."""
    probe_a = _probe_points(instance, resolution)
    hull_a = _hull_equations(_solid_world_vertices(instance, resolution))
    lo_a, hi_a = probe_a.min(axis=0), probe_a.max(axis=0)
    for other in others:
        if other.shape is ShapeClass.FLOOR or other.id == instance.id:
            continue
        probe_b = _probe_points(other, resolution)
        lo_b, hi_b = probe_b.min(axis=0), probe_b.max(axis=0)
        if np.any(lo_a > hi_b + tol) or np.any(lo_b > hi_a + tol):
            continue
        hull_b = _hull_equations(_solid_world_vertices(other, resolution))
        if _inside_count(probe_a, hull_b, tol) or _inside_count(probe_b, hull_a, tol):
            raise InterpenetrationError(instance.id, other.id)


def check_support(instance: PrimitiveInstance, supports, resolution: int = DEFAULT_RESOLUTION) -> None:
    """Raise SupportError unless the lowest vertex of ``instance`` rests on a support face.

    ``supports`` are the other primitives; the floor top (z = 0) and the
    steppable faces of every other primitive count as support surfaces.
    """
    if instance.shape is ShapeClass.FLOOR:
        return
    verts = tessellate(instance, resolution).vertices
    z_min = verts[:, 2].min()
    lowest = verts[verts[:, 2] <= z_min + SUPPORT_TOL]
    faces = [f for f in (step_face(s) for s in supports if s.id != instance.id) if f is not None]
    for vx, vy, vz in lowest:
        for f in faces:
            h = f.height_at(vx, vy)
            if np.isfinite(h) and abs(float(h) - vz) <= SUPPORT_TOL:
                return
    raise SupportError(instance.id, f"lowest vertex at z={z_min:.6g}")


def _zero_tilt(instance: PrimitiveInstance) -> PrimitiveInstance:
    if instance.shape in TOP_FACE_CLASSES and (instance.pose.roll or instance.pose.pitch):
        pose = Pose6D(instance.pose.x, instance.pose.y, instance.pose.z, 0.0, 0.0, instance.pose.yaw)
        return replace(instance, pose=pose)
    return instance


def build_scene(
    primitives,
    policy: LabelPolicyConfig | None = None,
    environment: Environment | str = Environment.OUTDOOR,
    goal: GoalRegion | None = None,
    seed: int = 0,
    resolution: int = DEFAULT_RESOLUTION,
    start: StartPose | None = None,
    validate: bool = True,
) -> Scene:
    """Validate explicit primitives and assemble a Scene (no repositioning)."""
    policy = policy or LabelPolicyConfig()
    environment = Environment(environment)
    prims = [_zero_tilt(p) for p in primitives]
    ids = [p.id for p in prims]
    if len(set(ids)) != len(ids):
        raise SceneError(f"duplicate primitive ids: {sorted(ids)}")
    if validate:
        for k, p in enumerate(prims):
            check_support(p, prims, resolution)
            check_interpenetration(p, prims[:k], resolution)
    meshes = tuple(_labeled_mesh(p, policy, resolution) for p in prims)
    env = tuple(environment_meshes()) if environment is Environment.INDOOR else ()
    return Scene(
        primitives=tuple(prims),
        meshes=meshes,
        environment=environment,
        goal=goal or GoalRegion(),
        rng_seed=int(seed),
        policy=policy,
        resolution=resolution,
        start=start or StartPose(),
        environment_meshes=env,
    )


@dataclass
class SceneConfig:
    mode: PlacementMode = PlacementMode.SCATTER
    counts: dict = field(default_factory=dict)
    environment: Environment = Environment.OUTDOOR
    seed: int = 0
    manual: list = field(default_factory=list)
    goal: GoalRegion | None = None
    start: StartPose | None = None
    resolution: int = DEFAULT_RESOLUTION
    cluster_radius: float = 0.7
    floor_known: bool = True

    def __post_init__(self):
        self.mode = PlacementMode(self.mode)
        self.environment = Environment(self.environment)
        self.counts = {ShapeClass(k): int(v) for k, v in self.counts.items()}
        for k, v in self.counts.items():
            if v < 0:
                raise ValueError(f"count for {k.value} must be >= 0, got {v}")
            if k is ShapeClass.FLOOR:
                raise ValueError("the floor is always added; do not request it in counts")

    @classmethod
    def from_dict(cls, d: dict) -> SceneConfig:
        d = dict(d)
        if d.get("goal") is not None:
            d["goal"] = GoalRegion.from_dict(d["goal"])
        if d.get("start") is not None:
            d["start"] = StartPose.from_dict(d["start"])
        return cls(**d)


def _initial_orientation(shape: ShapeClass, rng: np.random.Generator) -> tuple[float, float, float]:
    yaw = float(rng.uniform(-math.pi, math.pi))
    if shape is ShapeClass.POLE:
        return 0.0, -math.pi / 2, yaw
    if shape is ShapeClass.SPHERE:
        return float(rng.uniform(-math.pi, math.pi)), float(rng.uniform(-math.pi / 2, math.pi / 2)), yaw
    return 0.0, 0.0, yaw


def _footprint(instance: PrimitiveInstance, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    v = tessellate(instance, resolution).vertices
    return v.min(axis=0), v.max(axis=0)


def _place(candidate: PrimitiveInstance, placed, resolution: int):
    """Snap ``candidate`` onto the floor or a horizontal top face; None if it conflicts."""
    lo, hi = _footprint(candidate, resolution)
    half = FLOOR_SIZE / 2
    if lo[0] < -half or lo[1] < -half or hi[0] > half or hi[1] > half:
        return None
    corners_x = np.array([lo[0], hi[0], lo[0], hi[0]])
    corners_y = np.array([lo[1], lo[1], hi[1], hi[1]])
    support_z, support_id = 0.0, None
    for p in placed:
        if p.shape not in (ShapeClass.CUBOID, ShapeClass.CYLINDER):
            continue
        f = step_face(p)
        h = f.height_at(corners_x, corners_y)
        if np.all(np.isfinite(h)) and float(h.max()) > support_z:
            support_z, support_id = float(h.max()), p.id
    lift = support_z - lo[2]
    moved = replace(candidate, pose=candidate.pose.with_position(z=candidate.pose.z + lift))
    lo, hi = lo + [0, 0, lift], hi + [0, 0, lift]
    for p in placed:
        if p.shape is ShapeClass.FLOOR or p.id == support_id:
            continue
        plo, phi = _footprint(p, resolution)
        overlap_xy = lo[0] < phi[0] and plo[0] < hi[0] and lo[1] < phi[1] and plo[1] < hi[1]
        if overlap_xy and lo[2] < phi[2] and plo[2] < hi[2]:
            return None
    return moved


def assemble_scene(config: SceneConfig, policy: LabelPolicyConfig | None = None) -> Scene:
    """Floor first, then primitives placed per ``config.mode``; deterministic in ``config.seed``."""
    policy = policy or LabelPolicyConfig()
    prims: list[PrimitiveInstance] = [floor_instance(0, known_to_planner=config.floor_known)]
    if config.mode is PlacementMode.MANUAL:
        for k, entry in enumerate(config.manual):
            if isinstance(entry, PrimitiveInstance):
                inst = entry
            else:
                entry = dict(entry)
                entry.setdefault("id", k + 1)
                inst = PrimitiveInstance.from_dict(entry)
            prims.append(inst)
        return build_scene(
            prims, policy, config.environment, config.goal, config.seed, config.resolution, config.start
        )

    rng = np.random.default_rng(config.seed)
    center = np.zeros(2)
    radius = FLOOR_SIZE / 2
    if config.mode is PlacementMode.CLUSTER:
        center = rng.uniform(-1.0, 1.0, size=2)
        radius = config.cluster_radius
    order = [s for s in ShapeClass if s in config.counts]
    next_id = 1
    for shape in order:
        for _ in range(config.counts[shape]):
            base = sample_primitive(shape, policy, rng, instance_id=next_id)
            for attempt in range(PLACEMENT_RETRIES):
                if attempt and attempt % RESAMPLE_EVERY == 0:
                    # a large sample may not fit the region at any position; redraw its size
                    base = sample_primitive(shape, policy, rng, instance_id=next_id)
                xy = center + rng.uniform(-radius, radius, size=2)
                roll, pitch, yaw = _initial_orientation(shape, rng)
                cand = replace(base, pose=Pose6D(xy[0], xy[1], 0.0, roll, pitch, yaw))
                placed = _place(cand, prims, config.resolution)
                if placed is not None:
                    prims.append(placed)
                    break
            else:
                raise PlacementError(f"could not place {shape.value} #{next_id} after {PLACEMENT_RETRIES} attempts")
            next_id += 1
    return build_scene(prims, policy, config.environment, config.goal, config.seed, config.resolution, config.start)


def spawn_obstacle(scene: Scene, instance: PrimitiveInstance) -> Scene:
    """Return a new scene version with ``instance`` added as an unknown obstacle."""
    if any(p.id == instance.id for p in scene.primitives):
        raise SceneError(f"primitive id {instance.id} already in use")
    inst = _zero_tilt(replace(instance, known_to_planner=False))
    check_support(inst, scene.primitives, scene.resolution)
    check_interpenetration(inst, scene.primitives, scene.resolution)
    mesh = _labeled_mesh(inst, scene.policy, scene.resolution)
    return replace(scene, primitives=scene.primitives + (inst,), meshes=scene.meshes + (mesh,))


def scene_from_dict(d: dict, validate: bool = True) -> Scene:
    policy = LabelPolicyConfig(**d.get("label_policy", {}))
    prims = [PrimitiveInstance.from_dict(p) for p in d["primitives"]]
    return build_scene(
        prims,
        policy,
        d.get("environment", "outdoor"),
        GoalRegion.from_dict(d["goal"]) if "goal" in d else None,
        int(d.get("seed", 0)),
        int(d.get("resolution", DEFAULT_RESOLUTION)),
        StartPose.from_dict(d["start"]) if "start" in d else None,
        validate=validate,
    )


def load_scene(path) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))


def save_scene(scene: Scene, path) -> None:
    with open(path, "w") as fh:
        fh.write(scene.to_json())


def nonpassable_meshes(scene: Scene) -> list[LabeledMesh]:
    np_label = int(SteppabilityLabel.NON_PASSABLE)
    return [m for m in scene.all_meshes() if np.any(m.face_labels == np_label)]
