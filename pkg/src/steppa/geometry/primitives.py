"""Primitive shape classes, their parameter ranges and sampling."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class SteppabilityLabel(enum.IntEnum):
    """Per-face terrain label. Values double as mask palette indices."""

    STEPPABLE = 1
    PASSABLE = 2
    NON_PASSABLE = 3


class ShapeClass(str, enum.Enum):
    CUBOID = "cuboid"
    CYLINDER = "cylinder"
    RAMP = "ramp"
    SPHERE = "sphere"
    SEMISPHERE = "semisphere"
    PIPE = "pipe"
    POLE = "pole"
    TUBE = "tube"
    FLOOR = "floor"


FLOOR_SIZE = 4.0
FLOOR_THICKNESS = 0.05

# sampling ranges in metres, (low, high)
PARAM_RANGES: dict[ShapeClass, dict[str, tuple[float, float]]] = {
    ShapeClass.CUBOID: {"length": (0.2, 1.0), "width": (0.1, 0.5), "height": (0.05, 0.25)},
    ShapeClass.RAMP: {"length": (0.2, 1.0), "width": (0.1, 0.5), "height": (0.05, 0.25)},
    ShapeClass.CYLINDER: {"radius_x": (0.10, 0.50), "radius_y": (0.10, 0.50), "height": (0.05, 0.25)},
    ShapeClass.SPHERE: {"radius": (0.025, 0.05)},
    ShapeClass.SEMISPHERE: {"radius": (0.025, 0.05)},
    ShapeClass.PIPE: {"length": (0.10, 0.50), "radius": (0.025, 0.05)},
    ShapeClass.POLE: {"length": (0.10, 0.50), "radius": (0.025, 0.05)},
    ShapeClass.TUBE: {"length": (0.50, 1.0), "radius": (0.025, 0.05)},
    ShapeClass.FLOOR: {},
}

# classes whose top face carries the steppable label
TOP_FACE_CLASSES = frozenset({ShapeClass.CUBOID, ShapeClass.RAMP, ShapeClass.CYLINDER})
ROD_CLASSES = frozenset({ShapeClass.PIPE, ShapeClass.POLE, ShapeClass.TUBE})
CURVED_CLASSES = frozenset(
    {ShapeClass.CYLINDER, ShapeClass.SPHERE, ShapeClass.SEMISPHERE} | ROD_CLASSES
)


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(float(a), 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


def euler_to_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


@dataclass(frozen=True)
class Pose6D:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("roll", "pitch", "yaw"):
            object.__setattr__(self, name, normalize_angle(getattr(self, name)))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def rotation(self) -> np.ndarray:
        return euler_to_matrix(self.roll, self.pitch, self.yaw)

    def with_position(self, x=None, y=None, z=None) -> Pose6D:
        return Pose6D(
            self.x if x is None else x,
            self.y if y is None else y,
            self.z if z is None else z,
            self.roll,
            self.pitch,
            self.yaw,
        )

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("x", "y", "z", "roll", "pitch", "yaw")}

    @classmethod
    def from_dict(cls, d: dict) -> Pose6D:
        return cls(**{k: float(d.get(k, 0.0)) for k in ("x", "y", "z", "roll", "pitch", "yaw")})


@dataclass(frozen=True)
class LabelPolicyConfig:
    h_max: float = 0.10

    def __post_init__(self):
        if not self.h_max > 0:
            raise ValueError(f"h_max must be > 0, got {self.h_max}")


@dataclass(frozen=True)
class PrimitiveInstance:
    """One scene element: a shape class, its parameters and a world pose.

    ``known_to_planner`` separates intended support objects (the foothold
    lattice is built on them) from obstacles, which the planner only sees
    through the steppability mask.
    """

    id: int
    shape: ShapeClass
    params: dict = field(default_factory=dict)
    pose: Pose6D = field(default_factory=Pose6D)
    known_to_planner: bool = True

    def __post_init__(self):
        object.__setattr__(self, "shape", ShapeClass(self.shape))
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})

    @property
    def height(self) -> float | None:
        return self.params.get("height")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "class": self.shape.value,
            "params": dict(sorted(self.params.items())),
            "pose": self.pose.to_dict(),
            "known_to_planner": self.known_to_planner,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PrimitiveInstance:
        return cls(
            id=int(d["id"]),
            shape=ShapeClass(d["class"]),
            params=dict(d.get("params", {})),
            pose=Pose6D.from_dict(d.get("pose", {})),
            known_to_planner=bool(d.get("known_to_planner", True)),
        )


def params_in_range(shape: ShapeClass, params: dict) -> bool:
    ranges = PARAM_RANGES[ShapeClass(shape)]
    if set(ranges) != set(params):
        return False
    return all(lo <= params[k] <= hi for k, (lo, hi) in ranges.items())


def sample_primitive(
    shape: ShapeClass,
    policy: LabelPolicyConfig,
    rng: np.random.Generator,
    instance_id: int = 0,
) -> PrimitiveInstance:
    """Draw parameters uniformly from the class range; the pose stays at the origin.

    ``policy`` is accepted for symmetry with the labelling stage; the sampled
    geometry does not depend on it.
    """
    shape = ShapeClass(shape)
    if shape is ShapeClass.FLOOR:
        raise ValueError("floor instances are created by assemble_scene, not sampled")
    params = {name: float(rng.uniform(lo, hi)) for name, (lo, hi) in PARAM_RANGES[shape].items()}
    return PrimitiveInstance(id=instance_id, shape=shape, params=params, pose=Pose6D())


def floor_instance(instance_id: int = 0, known_to_planner: bool = True) -> PrimitiveInstance:
    return PrimitiveInstance(
        id=instance_id, shape=ShapeClass.FLOOR, params={}, pose=Pose6D(), known_to_planner=known_to_planner
    )
