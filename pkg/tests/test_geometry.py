from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import euler_characteristic, rule_table_labels
from steppa.geometry import (
    PARAM_RANGES,
    DegenerateGeometryError,
    Environment,
    GoalRegion,
    InterpenetrationError,
    LabelPolicyConfig,
    PlacementMode,
    Pose6D,
    PrimitiveInstance,
    SceneConfig,
    ShapeClass,
    SteppabilityLabel,
    SupportError,
    assemble_scene,
    assign_labels,
    sample_primitive,
    scene_from_dict,
    spawn_obstacle,
    step_face,
    tessellate,
)
from steppa.geometry.primitives import normalize_angle
from steppa.geometry.presets import RISER, STONE_SPHERES, STONES, preset_scene

S, P, NP = SteppabilityLabel.STEPPABLE, SteppabilityLabel.PASSABLE, SteppabilityLabel.NON_PASSABLE
SAMPLED = [s for s in ShapeClass if s is not ShapeClass.FLOOR]
POLICY = LabelPolicyConfig()


def test_enumerations():
    assert len(SteppabilityLabel) == 3
    assert len(ShapeClass) == 9


def test_label_policy_rejects_nonpositive_hmax():
    with pytest.raises(ValueError, match="h_max"):
        LabelPolicyConfig(0.0)


def test_sample_cuboid_and_sphere_ranges():
    rng = np.random.default_rng(3)
    c = sample_primitive(ShapeClass.CUBOID, POLICY, rng)
    assert 0.2 <= c.params["length"] <= 1.0
    assert 0.1 <= c.params["width"] <= 0.5
    assert 0.05 <= c.params["height"] <= 0.25
    s = sample_primitive(ShapeClass.SPHERE, POLICY, rng)
    assert 0.025 <= s.params["radius"] <= 0.05
    assert c.pose == Pose6D()


def test_sample_is_deterministic():
    a = sample_primitive(ShapeClass.TUBE, POLICY, np.random.default_rng(11))
    b = sample_primitive(ShapeClass.TUBE, POLICY, np.random.default_rng(11))
    assert a == b


def test_sample_floor_rejected():
    with pytest.raises(ValueError):
        sample_primitive(ShapeClass.FLOOR, POLICY, np.random.default_rng(0))


def test_parameter_ranges_fuzz():
    rng = np.random.default_rng(0)
    for k in range(10_000):
        shape = SAMPLED[k % len(SAMPLED)]
        p = sample_primitive(shape, POLICY, rng).params
        assert set(p) == set(PARAM_RANGES[shape])
        for name, (lo, hi) in PARAM_RANGES[shape].items():
            assert lo <= p[name] <= hi


@given(st.floats(-50, 50))
def test_angle_normalised(a):
    b = normalize_angle(a)
    assert -math.pi < b <= math.pi
    assert math.isclose(math.cos(a), math.cos(b), abs_tol=1e-9)
    assert math.isclose(math.sin(a), math.sin(b), abs_tol=1e-9)


def _cuboid(h=0.15, l=0.4, w=0.3, pose=Pose6D(0, 0, 0.075), pid=1):
    return PrimitiveInstance(pid, ShapeClass.CUBOID, {"length": l, "width": w, "height": h}, pose)


def test_tessellation_topologies():
    box = tessellate(_cuboid())
    assert box.n_triangles == 12
    assert len(set(box.face_tags)) == 3  # top, bottom, side tags over 6 logical faces
    assert euler_characteristic(box.triangles) == 2
    ramp = PrimitiveInstance(2, ShapeClass.RAMP, {"length": 0.5, "width": 0.3, "height": 0.1})
    wedge = tessellate(ramp)
    assert wedge.n_triangles == 8
    assert euler_characteristic(wedge.triangles) == 2
    sphere = tessellate(PrimitiveInstance(3, ShapeClass.SPHERE, {"radius": 0.04}), 16)
    assert euler_characteristic(sphere.triangles) == 2


@pytest.mark.parametrize("shape", SAMPLED + [ShapeClass.FLOOR])
def test_meshes_closed_and_outward(shape):
    rng = np.random.default_rng(5)
    inst = sample_primitive(shape, POLICY, rng) if shape is not ShapeClass.FLOOR else PrimitiveInstance(0, shape)
    m = tessellate(inst)
    tv = m.triangle_vertices()
    # divergence theorem: sum over faces of (centroid . n) * area = 3 V > 0 for outward normals
    cross = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    volume = float(np.sum(np.einsum("ij,ij->i", tv[:, 0], cross))) / 6.0
    assert volume > 0
    # every undirected edge is shared by exactly two triangles
    edges = {}
    for a, b, c in m.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            edges[(min(u, v), max(u, v))] = edges.get((min(u, v), max(u, v)), 0) + 1
    assert set(edges.values()) == {2}
    assert m.triangles.min() >= 0 and m.triangles.max() < len(m.vertices)


def test_tessellate_rejects_degenerate_and_low_resolution():
    with pytest.raises(DegenerateGeometryError):
        tessellate(_cuboid(h=0.0))
    with pytest.raises(ValueError):
        tessellate(PrimitiveInstance(1, ShapeClass.SPHERE, {"radius": 0.04}), resolution=6)


def test_label_examples():
    box = _cuboid(h=0.15)
    m = assign_labels(tessellate(box), box, POLICY)
    top = np.array([t == "top" for t in m.face_tags])
    assert np.all(m.face_labels[top] == S)
    assert np.all(m.face_labels[~np.array([t in ("top", "bottom") for t in m.face_tags])] == NP)
    sph = PrimitiveInstance(2, ShapeClass.SPHERE, {"radius": 0.04})
    assert set(assign_labels(tessellate(sph), sph, POLICY).face_labels) == {int(P)}
    floor = PrimitiveInstance(0, ShapeClass.FLOOR)
    assert set(assign_labels(tessellate(floor), floor, POLICY).face_labels) == {int(S)}


def test_ramp_incline_is_steppable():
    ramp = PrimitiveInstance(1, ShapeClass.RAMP, {"length": 0.6, "width": 0.4, "height": 0.2}, Pose6D(0, 0, 0.1))
    m = assign_labels(tessellate(ramp), ramp, POLICY)
    n = m.normals()
    incline = (n[:, 2] > 0.1) & (n[:, 2] < 0.99)
    assert incline.sum() == 2
    assert np.all(m.face_labels[incline] == S)
    assert np.all(m.face_labels[~incline] == NP)


def test_rod_label_uses_axis_height():
    low = PrimitiveInstance(1, ShapeClass.POLE, {"length": 0.3, "radius": 0.04}, Pose6D(0, 0, 0.04))
    high = PrimitiveInstance(2, ShapeClass.POLE, {"length": 0.3, "radius": 0.04}, Pose6D(0, 0, 0.12))
    assert set(assign_labels(tessellate(low), low, POLICY).face_labels) == {int(P)}
    assert set(assign_labels(tessellate(high), high, POLICY).face_labels) == {int(NP)}


def random_instances(n: int, seed: int):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        shape = SAMPLED[int(rng.integers(len(SAMPLED)))]
        inst = sample_primitive(shape, POLICY, rng, instance_id=k)
        yaw = float(rng.uniform(-math.pi, math.pi))
        roll = pitch = 0.0
        if shape not in (ShapeClass.CUBOID, ShapeClass.RAMP, ShapeClass.CYLINDER):
            roll, pitch = rng.uniform(-math.pi, math.pi, size=2)
        z = float(rng.uniform(0.0, 0.3))
        inst = PrimitiveInstance(k, shape, inst.params, Pose6D(rng.uniform(-1, 1), rng.uniform(-1, 1), z, roll, pitch, yaw))
        out.append(inst)
    return out


def label_mismatches(instances, policy) -> int:
    bad = 0
    for inst in instances:
        m = assign_labels(tessellate(inst), inst, policy)
        expect = rule_table_labels(inst.shape.value, inst.params, inst.pose.z, m.normals(), policy.h_max)
        bad += int(np.sum(expect != m.face_labels))
    return bad


def test_label_policy_matches_rule_table():
    assert label_mismatches(random_instances(300, 1), LabelPolicyConfig(0.08)) == 0


@given(st.floats(0.01, 0.5))
def test_label_policy_matches_rule_table_any_hmax(h):
    assert label_mismatches(random_instances(20, 2), LabelPolicyConfig(h)) == 0


def test_scatter_empty_scene_is_floor_only():
    scene = assemble_scene(SceneConfig(mode=PlacementMode.SCATTER, counts={}))
    assert [p.shape for p in scene.primitives] == [ShapeClass.FLOOR]
    assert len(scene.meshes) == 1


def test_manual_staircase_heights_increase():
    manual = [
        _cuboid(h=0.08, l=1.6 - 0.3 * k, w=1.0, pose=Pose6D(0.15 * k, 0, 0.08 * k + 0.04), pid=k + 1) for k in range(4)
    ]
    scene = assemble_scene(SceneConfig(mode=PlacementMode.MANUAL, manual=manual))
    tops = [f.center[2] for f in (step_face(p) for p in scene.primitives[1:])]
    assert all(b > a for a, b in zip(tops, tops[1:]))
    for mesh in scene.meshes[1:]:
        assert int(S) in set(mesh.face_labels)


def test_manual_floating_primitive_rejected_with_id():
    manual = [_cuboid(pose=Pose6D(0, 0, 0.5), pid=7)]
    with pytest.raises(SupportError, match="7"):
        assemble_scene(SceneConfig(mode=PlacementMode.MANUAL, manual=manual))


def test_indoor_adds_nonpassable_enclosure():
    scene = assemble_scene(SceneConfig(counts={}, environment=Environment.INDOOR))
    assert len(scene.environment_meshes) == 5
    for m in scene.environment_meshes:
        assert set(m.face_labels) == {int(NP)}


COUNTS = {"cuboid": 2, "cylinder": 1, "ramp": 1, "sphere": 2, "semisphere": 1, "pipe": 1, "pole": 1, "tube": 1}
CLUSTER_COUNTS = {"cuboid": 1, "cylinder": 1, "sphere": 1, "pole": 1}


@given(st.integers(0, 2**31 - 1), st.sampled_from(["scatter", "cluster"]))
def test_assembled_scenes_supported_and_untilted(seed, mode):
    counts = COUNTS if mode == "scatter" else CLUSTER_COUNTS
    scene = assemble_scene(SceneConfig(mode=mode, counts=counts, seed=seed))
    faces = [f for f in (step_face(p) for p in scene.primitives) if f is not None]
    for p, m in zip(scene.primitives, scene.meshes):
        if p.shape in (ShapeClass.CUBOID, ShapeClass.RAMP, ShapeClass.CYLINDER):
            assert p.pose.roll == 0.0 and p.pose.pitch == 0.0
        if p.shape is ShapeClass.FLOOR:
            continue
        z = m.vertices[:, 2]
        low = m.vertices[z <= z.min() + 1e-9]
        gaps = [abs(f.height_at(v[0], v[1]) - v[2]) for v in low for f in faces if f.owner_id != p.id]
        assert min(g for g in gaps if np.isfinite(g)) <= 1e-9


def test_assemble_deterministic():
    cfg = SceneConfig(mode="cluster", counts=CLUSTER_COUNTS, seed=42)
    assert assemble_scene(cfg).to_json() == assemble_scene(SceneConfig(mode="cluster", counts=CLUSTER_COUNTS, seed=42)).to_json()


def test_scene_round_trip():
    scene = assemble_scene(SceneConfig(counts=COUNTS, seed=9))
    again = scene_from_dict(json.loads(scene.to_json()))
    assert again.to_json() == scene.to_json()
    for a, b in zip(scene.meshes, again.meshes):
        np.testing.assert_array_equal(a.face_labels, b.face_labels)


def test_stepping_stones_spheres_rest_on_stones(stones):
    faces = {p.id: step_face(p) for p in stones.primitives if p.shape is ShapeClass.CUBOID}
    spheres = [p for p in stones.primitives if p.shape is ShapeClass.SPHERE]
    assert len(spheres) == len(STONE_SPHERES)
    for s in spheres:
        assert not s.known_to_planner
        assert 2 * s.params["radius"] > stones.policy.h_max
        bottom = s.pose.position - np.array([0, 0, s.params["radius"]])
        assert any(f.contains_ab(*f.to_face(bottom)) and abs(f.height_at(*bottom[:2]) - bottom[2]) < 1e-9 for f in faces.values())
    assert len(faces) == len(STONES)


def test_staircase_risers_within_hmax(stairs):
    steps = [p for p in stairs.primitives if p.shape is ShapeClass.CUBOID and p.known_to_planner]
    tops = sorted(step_face(p).center[2] for p in steps)
    assert all(0 < b - a <= stairs.policy.h_max for a, b in zip([0.0] + tops, tops))
    assert np.isclose(tops[0], RISER)
    pillar = [p for p in stairs.primitives if not p.known_to_planner]
    assert len(pillar) == 1 and pillar[0].height > stairs.policy.h_max


def test_sloped_ramps_steppable(slope):
    ramps = [(p, m) for p, m in zip(slope.primitives, slope.meshes) if p.shape is ShapeClass.RAMP]
    assert len(ramps) == 2
    for p, m in ramps:
        top = np.array([t == "top" for t in m.face_tags])
        assert np.all(m.face_labels[top] == S)
    assert all(p.shape is not ShapeClass.SPHERE for p in slope.primitives)


def test_spawn_sphere_nonpassable(slope):
    sphere = PrimitiveInstance(50, ShapeClass.SPHERE, {"radius": 0.06}, Pose6D(1.3, 0.3, 0.06))
    out = spawn_obstacle(slope, sphere)
    assert len(out.primitives) == len(slope.primitives) + 1
    assert set(out.mesh_for(50).face_labels) == {int(NP)}
    assert not out.primitive(50).known_to_planner
    assert len(slope.primitives) == 3  # original version untouched


def test_spawn_floating_or_overlapping_rejected(slope):
    with pytest.raises(SupportError):
        spawn_obstacle(slope, PrimitiveInstance(50, ShapeClass.SPHERE, {"radius": 0.06}, Pose6D(1.3, 0.3, 0.5)))
    stairs = preset_scene("staircase")
    box = _cuboid(h=0.2, pose=Pose6D(1.35, 0.45, 0.1), pid=60)
    with pytest.raises(InterpenetrationError):
        spawn_obstacle(stairs, box)


def test_goal_region_positive_radius():
    with pytest.raises(ValueError):
        GoalRegion((0, 0, 0), 0.0)
