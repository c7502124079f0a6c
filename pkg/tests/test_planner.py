from __future__ import annotations

import math
from collections import deque
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from oracles import homogeneous_projection, polyline_distance
from steppa.camera import CameraPose, Intrinsics
from steppa.geometry import GoalRegion, Pose6D, PrimitiveInstance, ShapeClass, StartPose, build_scene
from steppa.geometry.primitives import floor_instance
from steppa.nav.perception import camera_pose
from steppa.planner import (
    Converged,
    EdgeCosts,
    ExperienceStore,
    Failed,
    FootId,
    GraphConfig,
    GraphError,
    LatticeError,
    MaskContext,
    Mode,
    NoPath,
    PlannerConfig,
    TorsoPath,
    TransitionEdge,
    build_lattice,
    edge_costs,
    edge_weight,
    plan,
    prepare,
    search,
    steppability_weight,
)
from steppa.planner.weights import query_weights
from steppa.render import PLANNING_RENDER, LabelMask, QueryLabel, raycast_frame

NP = int(QueryLabel.NON_PASSABLE)


def _box(pid, x, y, l, w, h, known=True):
    return PrimitiveInstance(pid, ShapeClass.CUBOID, {"length": l, "width": w, "height": h}, Pose6D(x, y, h / 2), known)


# ---------------------------------------------------------------- lattice


def test_lattice_on_unit_face():
    scene = build_scene([floor_instance(known_to_planner=False), _box(1, 0, 0, 1.0, 1.0, 0.05)])
    lat = build_lattice(scene, 0.25)
    # hand enumeration: cells of 0.25 m whose centres keep a 0.125 m margin
    axis = (-0.375, -0.125, 0.125, 0.375)
    ref = sorted((a, b) for a in axis for b in axis)
    got = sorted(map(tuple, np.round(lat.points[:, :2], 9)))
    assert got == ref
    assert len(got) == 16
    np.testing.assert_allclose(lat.points[:, 2], 0.05)


def test_lattice_coarse_resolution_falls_back_to_centroid():
    scene = build_scene([floor_instance(known_to_planner=False), _box(1, 0.3, -0.2, 0.3, 0.2, 0.05)])
    lat = build_lattice(scene, 1.0)
    np.testing.assert_allclose(lat.points, [[0.3, -0.2, 0.05]], atol=1e-12)


def test_obstacles_contribute_no_points(stones):
    lat = build_lattice(stones)
    obstacle_ids = {p.id for p in stones.primitives if not p.known_to_planner}
    assert obstacle_ids and not obstacle_ids & set(lat.owners.tolist())


def test_lattice_points_on_steppable_faces(stones):
    lat = build_lattice(stones)
    for p, o in zip(lat.points, lat.owners):
        f = lat.face_of(int(o))
        assert abs(float(f.distance_to_plane(p))) < 1e-6
        assert f.contains_ab(*f.to_face(p))


def test_lattice_requires_steppable_faces():
    scene = build_scene([floor_instance(known_to_planner=False)])
    with pytest.raises(LatticeError):
        build_lattice(scene)


# ---------------------------------------------------------------- graph


def two_stones(gap=0.1):
    a = _box(1, -0.45, 0, 0.8 - gap, 0.6, 0.05)
    b = _box(2, 0.45, 0, 0.8 - gap, 0.6, 0.05)
    goal = GoalRegion((0.45, 0.0, 0.35), 0.1)
    return build_scene([floor_instance(known_to_planner=False), a, b], goal=goal, start=StartPose(-0.45, 0, 0))


def test_two_stones_reachable_by_bfs():
    problem = prepare(two_stones(), PlannerConfig(resolution=0.05))
    g = problem.graph
    adj = {}
    for s, d in zip(g.edge_src.tolist(), g.edge_dst.tolist()):
        adj.setdefault(s, []).append(d)
    seen, queue = {0}, deque([0])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, []):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    goals = set(np.flatnonzero(g.is_goal).tolist())
    assert seen & goals
    owners = {int(o) for v in seen & goals for o in g.lattice.owners[g.keys[v]]}
    assert owners == {2}


def test_zero_reach_gives_no_edges():
    cfg = PlannerConfig(graph=GraphConfig(reach_long=0.0, reach_lat=0.0))
    assert prepare(two_stones(), cfg).graph.n_edges == 0


def test_every_edge_moves_one_foot(stones):
    g = prepare(stones).graph
    assert g.n_edges > 0
    for e in range(g.n_edges):
        edge = g.edge(e)
        edge.check()
        moved = np.flatnonzero(g.keys[g.edge_src[e]] != g.keys[g.edge_dst[e]])
        assert moved.tolist() == [int(edge.swing_foot)]


def test_unreachable_goal_names_side(stones):
    with pytest.raises(GraphError, match="goal"):
        prepare(stones, goal=GoalRegion((5.0, 5.0, 0.3), 0.2))
    far = replace(stones, start=StartPose(3.0, 3.0, 0.0))
    with pytest.raises(GraphError, match="start"):
        prepare(far)


# ---------------------------------------------------------------- steppability weight


def overhead_rig():
    K = Intrinsics(20.0, 20.0, 10.0, 10.0, 20, 20)
    pose = CameraPose.from_body(0, 0, 1.0, 0, -math.pi / 2, 0)
    return K, pose


def ground_point(K, pose, u, v):
    d = pose.R_CW.T @ np.array([(u + 0.5 - K.cx) / K.fx, (v + 0.5 - K.cy) / K.fy, 1.0])
    return pose.center + (-pose.center[2] / d[2]) * d


def edge_with(points):
    src = Mode(tuple(map(tuple, points)), (0, 0, 0, 0), FootId.LF)
    return TransitionEdge(src, Mode(tuple(map(tuple, points)), (0, 0, 0, 0), FootId.RH), FootId.LF)


def test_weight_worked_examples():
    K, pose = overhead_rig()
    values = np.ones((20, 20), dtype=np.uint8)
    values[2, 2] = NP
    mask = LabelMask(values)
    s = [ground_point(K, pose, u, 15) for u in (5, 8, 11, 14)]
    assert steppability_weight(edge_with(s), mask, K, pose, 0.0) == 4.0
    s3 = s[:3] + [ground_point(K, pose, 2, 2)]
    assert steppability_weight(edge_with(s3), mask, K, pose, 0.0) == 1003.0
    behind = s[:3] + [np.array([0.0, 0.0, 2.0])]
    assert steppability_weight(edge_with(behind), mask, K, pose, 0.0) == 8.0


def test_weight_inflation_sums_offsets():
    K, pose = overhead_rig()
    values = np.ones((20, 20), dtype=np.uint8)
    values[10, 11] = 2  # one pixel right of the centre pixel is passable
    centre = ground_point(K, pose, 10, 10)
    r = 0.05  # one pixel at this range
    others = [ground_point(K, pose, u, 16) for u in (4, 8, 12)]
    pts = np.array([centre] + others)
    w = steppability_weight(edge_with(pts), LabelMask(values), K, pose, r)
    labels = []
    for o in ([r, 0, 0], [-r, 0, 0], [0, r, 0], [0, -r, 0]):
        u, v, _ = homogeneous_projection(centre + o, K.fx, K.fy, K.cx, K.cy, pose.R_CW, pose.t_CW)
        labels.append(values[int(math.floor(v)), int(math.floor(u))])
    # the three other footholds query five steppable points each
    expect = 1 + sum({1: 1, 2: 100}[int(l)] for l in labels) + 3 * 5
    assert w == expect
    assert 2 in labels


def test_background_scores_as_not_in_frame():
    K, pose = overhead_rig()
    mask = LabelMask(np.zeros((20, 20), dtype=np.uint8))
    pts = [ground_point(K, pose, u, 10) for u in (3, 6, 9, 12)]
    assert steppability_weight(edge_with(pts), mask, K, pose, 0.0) == 20.0


WORSE = {1: 2, 2: 3}


@given(st.lists(st.sampled_from([0, 1, 2, 3, 4]), min_size=1, max_size=25), st.integers(0, 24))
def test_weight_monotone_in_labels(labels, k):
    k %= len(labels)
    if labels[k] not in WORSE:
        return
    worse = list(labels)
    worse[k] = WORSE[labels[k]]
    assert query_weights(worse).sum() > query_weights(labels).sum()


def test_edge_weight_hand_computed(stones):
    problem = prepare(stones)
    g = problem.graph
    K = Intrinsics(20.0, 20.0, 10.0, 10.0, 20, 20)
    e = g.edge(0)
    lat_start = e.source.com()
    terms = edge_weight(e, None, ExperienceStore(0.0), problem.path)
    assert terms.D == 0.0 and terms.d_step == 0.0
    assert math.isclose(terms.d_com, float(np.linalg.norm(e.dest.com() - lat_start)), abs_tol=1e-12)
    assert math.isclose(terms.d_tau, polyline_distance(e.dest.com(), problem.path.waypoints), abs_tol=1e-12)
    # an all-steppable mask with no inflation adds exactly 4
    mask = LabelMask(np.ones((K.height, K.width), dtype=np.uint8))
    ctx = MaskContext(mask, K, CameraPose.from_body(*e.footholds.mean(axis=0)[:2], 2.0, 0, -math.pi / 2, 0), 0.0)
    t2 = edge_weight(e, ctx, ExperienceStore(0.0), problem.path)
    assert math.isclose(t2.total, t2.d_com + t2.d_tau + 4.0, abs_tol=1e-12)


def test_edge_weight_zero_cases():
    pts = np.array([[0.2, 0.1, 0], [0.2, -0.1, 0], [-0.2, 0.1, 0], [-0.2, -0.1, 0]])
    e = edge_with(pts)
    path = TorsoPath(np.array([[-1, 0, 0.3], [1, 0, 0.3]]))
    t = edge_weight(e, None, None, path)
    assert t.d_com == 0.0 and t.d_tau == 0.0


def test_vectorised_costs_match_scalar(stones):
    problem = prepare(stones)
    f = raycast_frame(stones, Intrinsics(), camera_pose(problem.start), PLANNING_RENDER)
    ctx = MaskContext(f.mask, Intrinsics(), camera_pose(problem.start))
    store = ExperienceStore(1.5)
    g = problem.graph
    store.update(g.edge(3), Converged(4.0))
    costs = edge_costs(g, ctx, store)
    for e in range(0, g.n_edges, max(1, g.n_edges // 60)):
        ref = edge_weight(g.edge(e), ctx, store, problem.path)
        got = costs.terms(e)
        for a, b in zip(ref.to_dict().values(), got.to_dict().values()):
            assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


# ---------------------------------------------------------------- search


def oracle_optimum(graph, total):
    m = csr_matrix((total + 1e-300, (graph.edge_src, graph.edge_dst)), shape=(graph.n_vertices,) * 2)
    dist = dijkstra(m, indices=0)
    return float(dist[graph.is_goal].min())


def enumerate_paths(graph, total):
    out = {}
    for s, d, e in zip(graph.edge_src.tolist(), graph.edge_dst.tolist(), range(graph.n_edges)):
        out.setdefault(s, []).append((d, e))
    best = math.inf
    stack = [(0, 0.0)]
    while stack:
        v, c = stack.pop()
        if graph.is_goal[v]:
            best = min(best, c)
            continue
        for w, e in out.get(v, []):
            stack.append((w, c + total[e]))
    return best


@pytest.fixture(scope="module")
def toy():
    floor = floor_instance()
    scene = build_scene([floor], goal=GoalRegion((0.3, 0.0, 0.3), 0.08), start=StartPose(0.0, 0.0, 0.0))
    cfg = PlannerConfig(resolution=0.05, graph=GraphConfig(candidates=2, extra_layers=2))
    return prepare(scene, cfg)


def test_toy_graph_matches_exhaustive_enumeration(toy):
    g = toy.graph
    assert 0 < g.n_edges < 5000
    costs = edge_costs(g, None)
    res = search(g, costs)
    assert math.isclose(res.total_cost, enumerate_paths(g, costs.total), rel_tol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_search_optimal_under_random_costs(toy, seed):
    g = toy.graph
    rng = np.random.default_rng(seed)
    base = edge_costs(g, None)
    D = rng.uniform(0, 2, size=g.n_edges)
    costs = EdgeCosts(D, base.d_com, base.d_tau, rng.uniform(0, 5, size=g.n_edges), (1.0, 1.0, 1.0, 1.0))
    res = search(g, costs)
    assert math.isclose(res.total_cost, oracle_optimum(g, costs.total), rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(res.total_cost, sum(t.total for t in res.terms), rel_tol=1e-12)
    for a, b in zip(res.edges, res.edges[1:]):
        assert a.dest == b.source


@pytest.fixture(scope="module")
def stones_mask(stones):
    problem = prepare(stones)
    K = Intrinsics()
    pose = camera_pose(problem.start)
    f = raycast_frame(stones, K, pose, PLANNING_RENDER)
    return problem, MaskContext(f.mask, K, pose)


def test_search_optimal_on_preset(stones_mask):
    problem, ctx = stones_mask
    costs = edge_costs(problem.graph, ctx)
    res = search(problem.graph, costs)
    assert problem.graph.n_edges <= 10_000
    assert math.isclose(res.total_cost, oracle_optimum(problem.graph, costs.total), rel_tol=1e-9)


def test_goal_at_start_gives_empty_plan(stones):
    start = prepare(stones).start
    res = plan(prepare(stones, goal=GoalRegion(tuple(start.com()), 0.1)), None)
    assert res.edges == [] and res.total_cost == 0.0


def test_no_path_reports_frontier(toy):
    g = toy.graph
    blocked = replace(g, is_goal=np.zeros_like(g.is_goal))
    with pytest.raises(NoPath) as exc:
        search(blocked, edge_costs(blocked, None))
    assert exc.value.stats.nodes_expanded == g.n_vertices
    assert "frontier" in str(exc.value)


def np_center_count(ctx, result):
    return int(np.sum(ctx.center_labels(result.landings()) == NP)) if result.edges else 0


def test_heuristic_avoids_nonpassable(stones_mask):
    problem, ctx = stones_mask
    on = plan(problem, ctx, None, (1, 1, 1, 1))
    off = plan(problem, ctx, None, (1, 1, 1, 0))
    assert np_center_count(ctx, on) == 0
    assert np_center_count(ctx, off) >= 1
    # an NP-free path exists: drop every edge landing on an NP centre and check reachability
    g = problem.graph
    bad = ctx.center_labels(g.lattice.points) == NP
    landing = g.keys[g.edge_dst, g.edge_foot]
    keep = ~bad[landing]
    m = csr_matrix((np.ones(keep.sum()), (g.edge_src[keep], g.edge_dst[keep])), shape=(g.n_vertices,) * 2)
    assert np.isfinite(dijkstra(m, indices=0, unweighted=True)[g.is_goal]).any()


@given(st.floats(0.1, 50.0))
def test_lambda_scaling_keeps_argmin(stones_mask, c):
    problem, ctx = stones_mask
    a = plan(problem, ctx, None, (1, 1, 1, 1))
    b = plan(problem, ctx, None, (c, c, c, c))
    assert [e.dest for e in a.edges] == [e.dest for e in b.edges]
    assert math.isclose(b.total_cost, c * a.total_cost, rel_tol=1e-9)


@pytest.mark.parametrize("preset", ["stepping-stones", "staircase", "sloped"])
def test_search_time_under_budget(preset):
    from steppa.geometry.presets import preset_scene

    scene = preset_scene(preset)
    problem = prepare(scene)
    K = Intrinsics()
    pose = camera_pose(problem.start)
    ctx = MaskContext(raycast_frame(scene, K, pose, PLANNING_RENDER).mask, K, pose)
    assert problem.graph.n_edges <= 20_000
    res = plan(problem, ctx)
    assert res.stats.wall_time < 0.1


def test_plan_serialisation_keys(stones_mask):
    problem, ctx = stones_mask
    d = plan(problem, ctx).to_dict()
    assert set(d) >= {"edges", "total_cost", "stats"}
    e = d["edges"][0]
    assert set(e) >= {"swing_foot", "footholds", "terms", "cost"}
    assert len(e["footholds"]) == 4
    assert set(e["terms"]) == {"D", "d_com", "d_tau", "d_step"}


# ---------------------------------------------------------------- experience


def some_edge():
    pts = np.array([[0.2, 0.1, 0], [0.2, -0.1, 0], [-0.2, 0.1, 0], [-0.2, -0.1, 0]])
    moved = pts.copy()
    moved[0, 0] += 0.15
    return TransitionEdge(Mode(tuple(map(tuple, pts)), (1, 1, 1, 1), FootId.LF), Mode(tuple(map(tuple, moved)), (1, 1, 1, 1), FootId.RH), FootId.LF)


def test_experience_examples():
    s = ExperienceStore()
    e = some_edge()
    s.update(e, Converged(7.0))
    assert s.stats(e).count == 1 and s.stats(e).mean == 7.0
    s2 = ExperienceStore()
    s2.update(e, Converged(4.0))
    s2.update(e, Converged(8.0))
    assert s2.expected_cost(e) == 6.0
    s3 = ExperienceStore(0.0)
    s3.update(e, Failed())
    assert s3.stats(e).mean == 100.0 and s3.stats(e).failures == 1
    assert ExperienceStore(2.0).c_fail == 120.0


def test_experience_unseen_uses_prior_and_round_trips(tmp_path):
    s = ExperienceStore(3.0)
    e = some_edge()
    assert s.expected_cost(e) == 3.0
    s.update(e, Converged(1.0))
    s.save(tmp_path / "x.json")
    t = ExperienceStore.load(tmp_path / "x.json")
    assert t.to_json() == s.to_json()


@given(st.lists(st.one_of(st.floats(0, 100), st.none()), min_size=1, max_size=30))
def test_experience_counts_never_decrease(outcomes):
    s = ExperienceStore()
    e = some_edge()
    last = 0
    for o in outcomes:
        s.update(e, Failed() if o is None else Converged(o))
        st_ = s.stats(e)
        assert st_.count == last + 1 and math.isfinite(st_.mean)
        last = st_.count


def test_family_has_three_contacts():
    e = some_edge()
    assert len(e.source.family.contacts) == 3
    assert FootId.LF not in e.source.family.feet
