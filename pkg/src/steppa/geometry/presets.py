"""Hand-built evaluation scenes.

Dimensions are chosen for a robot with a 0.38 m x 0.22 m nominal stance and
0.2 m strides; several deliberately leave the sampling ranges used for
training data (wide ramps, large stones, obstacle spheres taller than the
swing height).
"""

from __future__ import annotations

import enum
import math

from .primitives import LabelPolicyConfig, Pose6D, PrimitiveInstance, ShapeClass, floor_instance
from .scene import GoalRegion, Scene, StartPose, build_scene

COM_HEIGHT = 0.30


class PresetKind(str, enum.Enum):
    STEPPING_STONES = "stepping-stones"
    STAIRCASE = "staircase"
    SLOPED = "sloped"


def _cuboid(pid, x, y, length, width, height, base=0.0, yaw=0.0, known=True):
    return PrimitiveInstance(
        pid,
        ShapeClass.CUBOID,
        {"length": length, "width": width, "height": height},
        Pose6D(x, y, base + height / 2, 0.0, 0.0, yaw),
        known,
    )


def _sphere(pid, x, y, radius, base):
    return PrimitiveInstance(pid, ShapeClass.SPHERE, {"radius": radius}, Pose6D(x, y, base + radius), False)


# (centre x, centre y, length, height, yaw) of each stone, start to goal
STONES = (
    (-1.20, 0.00, 0.80, 0.06, 0.00),
    (-0.535, 0.02, 0.40, 0.07, 0.12),
    (-0.07, -0.02, 0.42, 0.05, -0.10),
    (0.40, 0.03, 0.40, 0.08, 0.08),
    (1.05, 0.00, 0.80, 0.06, 0.00),
)
STONE_WIDTH = 0.5
# obstacle spheres as (stone index, x, y) resting on the stone top; each sits on
# a foothold that a purely geometric plan over these stones would use
STONE_SPHERES = (
    (1, -0.674, 0.129),
    (2, -0.152, -0.087),
    (3, 0.435, -0.093),
)
SPHERE_RADIUS = 0.06


def stepping_stones(policy: LabelPolicyConfig | None = None, spheres=STONE_SPHERES, seed: int = 0) -> Scene:
    """Irregular stones over an unknown floor, with obstacle spheres on some stones."""
    prims = [floor_instance(0, known_to_planner=False)]
    for k, (x, y, length, h, yaw) in enumerate(STONES):
        prims.append(_cuboid(k + 1, x, y, length, STONE_WIDTH, h, yaw=yaw))
    pid = len(prims)
    for stone, x, y in spheres:
        prims.append(_sphere(pid, x, y, SPHERE_RADIUS, STONES[stone][3]))
        pid += 1
    first, last = STONES[0], STONES[-1]
    goal = GoalRegion((last[0], 0.0, last[3] + COM_HEIGHT), 0.25)
    start = StartPose(first[0], 0.0, 0.0)
    return build_scene(prims, policy, "outdoor", goal, seed, start=start)


RISER = 0.08
# (x_min, x_max) of each stacked step, bottom to top
STEPS = ((-1.2, 1.0), (-0.9, 0.7), (-0.6, 0.4))
STAIR_WIDTH = 1.0


def staircase(policy: LabelPolicyConfig | None = None, seed: int = 0) -> Scene:
    """Up-and-over stairs on a known floor; the far side is hidden from the start."""
    prims = [floor_instance(0)]
    for k, (x0, x1) in enumerate(STEPS):
        prims.append(_cuboid(k + 1, (x0 + x1) / 2, 0.0, x1 - x0, STAIR_WIDTH, RISER, base=k * RISER))
    prims.append(_cuboid(len(prims), 1.35, 0.45, 0.1, 0.1, 0.4, known=False))
    goal = GoalRegion((1.6, 0.0, COM_HEIGHT), 0.25)
    return build_scene(prims, policy, "outdoor", goal, seed, start=StartPose(-1.75, 0.0, 0.0))


RAMP_LENGTH, RAMP_HEIGHT, RAMP_WIDTH = 1.0, 0.10, 1.0


def sloped(policy: LabelPolicyConfig | None = None, seed: int = 0) -> Scene:
    """An up ramp followed by a down ramp; obstacles arrive through spawn scripts."""
    prims = [floor_instance(0)]
    up = PrimitiveInstance(
        1,
        ShapeClass.RAMP,
        {"length": RAMP_LENGTH, "width": RAMP_WIDTH, "height": RAMP_HEIGHT},
        Pose6D(-RAMP_LENGTH / 2, 0.0, RAMP_HEIGHT / 2),
    )
    down = PrimitiveInstance(
        2,
        ShapeClass.RAMP,
        {"length": RAMP_LENGTH, "width": RAMP_WIDTH, "height": RAMP_HEIGHT},
        Pose6D(RAMP_LENGTH / 2, 0.0, RAMP_HEIGHT / 2, 0.0, 0.0, math.pi),
    )
    prims += [up, down]
    goal = GoalRegion((1.6, 0.0, COM_HEIGHT), 0.25)
    return build_scene(prims, policy, "outdoor", goal, seed, start=StartPose(-1.6, 0.0, 0.0))


def preset_scene(kind, policy: LabelPolicyConfig | None = None, seed: int = 0) -> Scene:
    kind = PresetKind(kind)
    if kind is PresetKind.STEPPING_STONES:
        return stepping_stones(policy, seed=seed)
    if kind is PresetKind.STAIRCASE:
        return staircase(policy, seed=seed)
    return sloped(policy, seed=seed)
