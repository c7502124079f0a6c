"""Primitive shapes, tessellation, labels and scenes."""

from .faces import StepFace, step_face, surface_height
from .mesh import DEFAULT_RESOLUTION, DegenerateGeometryError, LabeledMesh, assign_labels, tessellate
from .primitives import (
    PARAM_RANGES,
    LabelPolicyConfig,
    Pose6D,
    PrimitiveInstance,
    ShapeClass,
    SteppabilityLabel,
    sample_primitive,
)
from .scene import (
    Environment,
    GoalRegion,
    InterpenetrationError,
    PlacementMode,
    Scene,
    SceneConfig,
    SceneError,
    StartPose,
    SupportError,
    assemble_scene,
    build_scene,
    load_scene,
    save_scene,
    scene_from_dict,
    spawn_obstacle,
)
