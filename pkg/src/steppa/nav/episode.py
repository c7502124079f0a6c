"""Event-driven execution of footstep plans with perception-bounded replanning.

Execution is kinematic: one tick renders the head camera, checks the next
few landings against the fresh mask and then carries out one transition.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..camera import Intrinsics
from ..geometry.primitives import Pose6D, PrimitiveInstance, ShapeClass
from ..geometry.scene import GoalRegion, Scene, spawn_obstacle
from ..planner.experience import Converged, ExperienceStore, Failed
from ..planner.graph import GraphError, start_mode
from ..planner.lattice import build_lattice
from ..planner.pipeline import PlannerConfig, plan, prepare, torso_path
from ..planner.search import NoPath
from ..planner.types import GAIT_ORDER, Mode, PlanResult, nominal_stance
from ..planner.weights import MaskContext
from ..render.raycast import PLANNING_RENDER, Frame, QueryLabel, RenderConfig, raycast_frame
from ..trajopt.problem import TOConfig
from ..trajopt.solver import SolveStatus
from ..trajopt import solve_transition
from .events import EventKind, NavEvent, boundary_reached, foothold_invalidated
from .perception import PerceivedRegion, camera_pose


@dataclass(frozen=True)
class SpawnCommand:
    tick: int
    instance: PrimitiveInstance

    def to_dict(self) -> dict:
        return {"tick": self.tick, "primitive": self.instance.to_dict()}


@dataclass(frozen=True)
class DisturbanceScript:
    commands: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "commands", tuple(self.commands))
        ticks = [c.tick for c in self.commands]
        if any(b < a for a, b in zip(ticks, ticks[1:])):
            raise ValueError("spawn ticks must be non-decreasing")
        if any(t < 0 for t in ticks):
            raise ValueError("spawn ticks must be >= 0")

    def at(self, tick: int) -> list:
        return [c for c in self.commands if c.tick == tick]

    def to_dict(self) -> dict:
        return {"spawns": [c.to_dict() for c in self.commands]}


SPAWN_ID_BASE = 1000


def parse_spawn(text: str, index: int = 0) -> SpawnCommand:
    """``tick:class:params:pose`` with params ``k=v,...`` and pose ``x,y,z[,roll,pitch,yaw]``."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"spawn {text!r}: expected tick:class:params:pose")
    tick_s, cls_s, params_s, pose_s = parts
    try:
        tick = int(tick_s)
        shape = ShapeClass(cls_s)
        params = {}
        for kv in filter(None, params_s.split(",")):
            k, v = kv.split("=")
            params[k.strip()] = float(v)
        vals = [float(v) for v in pose_s.split(",")]
    except ValueError as exc:
        raise ValueError(f"spawn {text!r}: {exc}") from None
    if len(vals) not in (3, 6):
        raise ValueError(f"spawn {text!r}: pose needs 3 or 6 numbers")
    pose = Pose6D(*vals)
    return SpawnCommand(tick, PrimitiveInstance(SPAWN_ID_BASE + index, shape, params, pose, False))


def parse_spawns(texts) -> DisturbanceScript:
    cmds = [parse_spawn(t, i) for i, t in enumerate(texts or [])]
    return DisturbanceScript(tuple(sorted(cmds, key=lambda c: c.tick)))


@dataclass(frozen=True)
class NavConfig:
    lookahead: int = 2
    tick_budget: int = 200
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    render: RenderConfig = PLANNING_RENDER
    intrinsics: Intrinsics = field(default_factory=Intrinsics)
    local_goal_radius: float = 0.2
    with_to: bool = False
    to: TOConfig = field(default_factory=TOConfig)

    def __post_init__(self):
        if self.lookahead < 0:
            raise ValueError("lookahead must be >= 0")


@dataclass
class NavState:
    stance: Mode
    pose: object
    plan: PlanResult | None
    progress: int
    perceived: PerceivedRegion
    experience: ExperienceStore
    tick: int = 0
    halted: bool = False
    frame: Frame | None = None

    def __post_init__(self):
        if self.plan is not None and not 0 <= self.progress <= len(self.plan.edges):
            raise ValueError("plan progress out of range")

    @property
    def remaining(self) -> list:
        return [] if self.plan is None else self.plan.edges[self.progress :]

    @property
    def perceived_bound(self) -> float:
        return self.perceived.bound(self.stance.com())


@dataclass
class EpisodeReport:
    success: bool
    ticks: int
    replans: int
    search_times: list
    solve_times: list
    events: list
    executed: list
    final_stance: Mode | None

    def to_dict(self, include_time: bool = False) -> dict:
        d = {
            "success": self.success,
            "ticks": self.ticks,
            "replans": self.replans,
            "events": [e.to_dict() for e in self.events],
            "executed": self.executed,
            "final_stance": None if self.final_stance is None else self.final_stance.to_dict(),
        }
        if include_time:
            d["search_times"] = self.search_times
            d["solve_times"] = self.solve_times
        return d

    def to_json(self, include_time: bool = False) -> str:
        return json.dumps(self.to_dict(include_time), sort_keys=True, indent=2) + "\n"


def observe(state: NavState, scene: Scene, config: NavConfig) -> Frame:
    """Render the head camera at the current stance and grow the perceived region."""
    pose = camera_pose(state.stance, float(state.tick))
    frame = raycast_frame(scene, config.intrinsics, pose, config.render, frame_index=state.tick)
    state.pose = pose
    state.frame = frame
    state.perceived.mark_frame(frame)
    state.perceived.mark_stance(state.stance)
    return frame


def mask_context(frame: Frame, config: NavConfig) -> MaskContext:
    return MaskContext(frame.mask, frame.intrinsics, frame.pose, config.planner.foot_radius)


def in_goal(mode: Mode, goal: GoalRegion) -> bool:
    return bool(goal.contains(mode.com()))


def local_goal(scene: Scene, state: NavState, lattice, config: NavConfig) -> GoalRegion:
    """The farthest point along the guide path whose nominal stance lies in perceived, steppable terrain."""
    c = state.stance.com()
    path = torso_path(scene, (c[0], c[1]), scene.goal.center, config.planner.path_spacing)
    L = path.length
    snap = config.planner.graph.snap_radius
    tree = lattice.tree() if len(lattice) else None
    s = L
    step = 0.05
    while s > 0:
        p = path.point_at(s)
        feet = nominal_stance(p[0], p[1], float(path.heading_at(s)))
        ok = bool(state.perceived.contains(feet).all())
        if ok and tree is not None:
            d, _ = tree.query(feet)
            ok = bool(np.all(d <= snap))
        if ok:
            if s >= L - 1e-9:
                return scene.goal
            return GoalRegion(tuple(float(v) for v in p), config.local_goal_radius)
        s = round(s - step, 9)
    return GoalRegion(tuple(float(v) for v in c), config.local_goal_radius)


def perceived_lattice(scene: Scene, state: NavState, config: NavConfig):
    full = build_lattice(scene, config.planner.resolution)
    keep = state.perceived.contains(full.points)
    return full.subset(np.flatnonzero(keep))


def replan(state: NavState, scene: Scene, config: NavConfig) -> tuple[NavState, list, float]:
    """Search a new plan from the current stance over perceived terrain."""
    frame = state.frame if state.frame is not None else observe(state, scene, config)
    lattice = perceived_lattice(scene, state, config)
    goal = local_goal(scene, state, lattice, config)
    t0 = time.perf_counter()
    try:
        if len(lattice) == 0:
            raise GraphError("perceived lattice is empty")
        problem = prepare(scene, config.planner, start=state.stance, goal=goal, lattice=lattice)
        result = plan(problem, mask_context(frame, config), state.experience, config.planner.lam)
    except (NoPath, GraphError) as exc:
        dt = time.perf_counter() - t0
        return state, [NavEvent(state.tick, EventKind.PLAN_FAILED, {"edge_index": -1, "reason": str(exc)})], dt
    dt = time.perf_counter() - t0
    state.plan = result
    state.progress = 0
    state.halted = False
    payload = {
        "edges": len(result.edges),
        "cost": round(result.total_cost, 9),
        "goal": [round(v, 9) for v in goal.center],
        "local": goal is not scene.goal,
    }
    return state, [NavEvent(state.tick, EventKind.REPLANNED, payload)], dt


def _label_name(code: int) -> str:
    return QueryLabel(int(code)).name


def tick(state: NavState, scene: Scene, config: NavConfig, lookahead: int | None = None) -> tuple[NavState, list, list]:
    """Observe, check upcoming footholds, then execute one transition.

    Returns the state, the events of this tick and per-transition solve times.
    """
    k = config.lookahead if lookahead is None else lookahead
    events: list[NavEvent] = []
    solve_times: list[float] = []
    frame = observe(state, scene, config)
    if in_goal(state.stance, scene.goal):
        events.append(NavEvent(state.tick, EventKind.GOAL_REACHED, {"com": [round(float(v), 9) for v in state.stance.com()]}))
        state.tick += 1
        return state, events, solve_times
    if state.plan is None:
        state.tick += 1
        return state, events, solve_times
    upcoming = state.remaining[:k]
    if upcoming:
        ctx = mask_context(frame, config)
        for n, edge in enumerate(upcoming):
            labels = ctx.query(edge.landing[None])[0]
            if np.any(labels == int(QueryLabel.NON_PASSABLE)):
                events.append(foothold_invalidated(state.tick, state.progress + n, edge.landing, "NON_PASSABLE"))
                state.halted = True
                state.tick += 1
                return state, events, solve_times
    nxt = state.remaining[:1]
    if not nxt:
        events.append(boundary_reached(state.tick, "plan exhausted"))
        state.halted = True
    elif not state.perceived.contains(nxt[0].landing[None])[0]:
        events.append(boundary_reached(state.tick, "landing outside perceived region"))
        state.halted = True
    else:
        edge = nxt[0]
        if config.with_to:
            sol = solve_transition(edge.source, edge.dest, scene, config.to)
            solve_times.append(sol.wall_time)
            if sol.status is SolveStatus.INFEASIBLE:
                state.experience.update(edge, Failed())
                events.append(NavEvent(state.tick, EventKind.PLAN_FAILED, {"edge_index": state.progress, "reason": "transition infeasible"}))
                state.halted = True
                state.tick += 1
                return state, events, solve_times
            state.experience.update(edge, Converged(sol.objective))
        state.stance = edge.dest
        state.progress += 1
    state.tick += 1
    return state, events, solve_times


def initial_state(scene: Scene, config: NavConfig, experience: ExperienceStore | None = None) -> NavState:
    st = scene.start
    lat = build_lattice(scene, config.planner.resolution)
    stance = start_mode(lat, st.x, st.y, st.yaw, GAIT_ORDER[0], config.planner.graph.snap_radius)
    return NavState(stance, camera_pose(stance), None, 0, PerceivedRegion(), experience or ExperienceStore())


def _executed_record(state: NavState, edge, frame: Frame, config: NavConfig) -> dict:
    label = mask_context(frame, config).center_labels(edge.landing[None])[0]
    return {
        "tick": state.tick,
        "foot": edge.swing_foot.name,
        "landing": [round(float(c), 9) for c in edge.landing],
        "label": _label_name(label),
    }


def run_episode(
    scene: Scene,
    script: DisturbanceScript | None = None,
    config: NavConfig | None = None,
    experience: ExperienceStore | None = None,
) -> EpisodeReport:
    """Tick until the goal, an unrecoverable planning failure or the tick budget."""
    config = config or NavConfig()
    script = script or DisturbanceScript()
    report = EpisodeReport(False, 0, 0, [], [], [], [], None)
    if config.tick_budget <= 0:
        return report
    state = initial_state(scene, config, experience)
    report.final_stance = state.stance
    for cmd in script.at(0):
        scene = spawn_obstacle(scene, cmd.instance)
    observe(state, scene, config)
    state, evs, dt = replan(state, scene, config)
    report.search_times.append(dt)
    if evs[0].kind is EventKind.PLAN_FAILED:
        report.events.extend(evs)
        return report
    while state.tick < config.tick_budget:
        if state.tick > 0:
            for cmd in script.at(state.tick):
                scene = spawn_obstacle(scene, cmd.instance)
        before = state.progress
        edge = state.remaining[0] if state.remaining else None
        state, evs, times = tick(state, scene, config)
        report.solve_times.extend(times)
        report.events.extend(evs)
        if state.progress > before:
            rec = _executed_record(state, edge, state.frame, config)
            rec["tick"] = state.tick - 1
            report.executed.append(rec)
        kinds = {e.kind for e in evs}
        if EventKind.GOAL_REACHED in kinds:
            report.success = True
            break
        if EventKind.PLAN_FAILED in kinds:
            break
        if kinds & {EventKind.BOUNDARY_REACHED, EventKind.FOOTHOLD_INVALIDATED}:
            state, evs, dt = replan(state, scene, config)
            report.search_times.append(dt)
            report.events.extend(evs)
            report.replans += int(evs[0].kind is EventKind.REPLANNED)
            if evs[0].kind is EventKind.PLAN_FAILED:
                break
    report.ticks = state.tick
    report.final_stance = state.stance
    return report


__all__ = [
    "DisturbanceScript",
    "EpisodeReport",
    "NavConfig",
    "NavState",
    "SpawnCommand",
    "initial_state",
    "local_goal",
    "parse_spawn",
    "parse_spawns",
    "replan",
    "run_episode",
    "tick",
]
