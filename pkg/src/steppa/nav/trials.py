"""Offline planning trials that accumulate transition experience."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..camera import Intrinsics
from ..geometry.scene import Scene
from ..planner.experience import Converged, ExperienceStore, Failed
from ..planner.graph import GraphError
from ..planner.pipeline import PlannerConfig, plan, prepare
from ..planner.search import NoPath
from ..planner.weights import MaskContext
from ..render.raycast import PLANNING_RENDER, QueryLabel, RenderConfig, raycast_frame
from ..trajopt import TOConfig, solve_transition
from ..trajopt.solver import SolveStatus
from .perception import camera_pose


@dataclass
class TrialReport:
    trial: int
    success: bool
    failed_at_edge: int | None
    n_edges: int
    path_cost: float | None
    to_cost: float | None
    np_footholds: int
    search_time: float = 0.0
    to_times: list = field(default_factory=list)
    statuses: list = field(default_factory=list)
    reason: str = ""

    def to_dict(self, include_time: bool = False) -> dict:
        d = {
            "trial": self.trial,
            "success": self.success,
            "failed_at_edge": self.failed_at_edge,
            "n_edges": self.n_edges,
            "path_cost": self.path_cost,
            "to_cost": self.to_cost,
            "np_footholds": self.np_footholds,
            "statuses": self.statuses,
        }
        if self.reason:
            d["reason"] = self.reason
        if include_time:
            d["search_time"] = self.search_time
            d["to_times"] = self.to_times
        return d


@dataclass(frozen=True)
class TrialConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    to: TOConfig = field(default_factory=TOConfig)
    render: RenderConfig = PLANNING_RENDER
    step_weight: float = 1.0  # lambda_step when the steppability term is on


def run_offline_trials(
    scene: Scene,
    n_max: int,
    heuristic_on: bool,
    experience: ExperienceStore | None = None,
    config: TrialConfig | None = None,
) -> list[TrialReport]:
    """Search, then optimise each transition in order until one fails.

    The steppability mask is the one seen from the start stance. Trials stop
    at the first fully feasible plan or after ``n_max`` attempts.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    cfg = config or TrialConfig()
    store = experience if experience is not None else ExperienceStore()
    lD, lc, lt, _ = cfg.planner.lam
    lam = (lD, lc, lt, cfg.step_weight if heuristic_on else 0.0)
    reports: list[TrialReport] = []
    try:
        problem = prepare(scene, cfg.planner)
    except GraphError as exc:
        return [TrialReport(1, False, None, 0, None, None, 0, reason=str(exc))]
    pose = camera_pose(problem.start)
    K = Intrinsics()
    frame = raycast_frame(scene, K, pose, cfg.render)
    ctx = MaskContext(frame.mask, K, pose, cfg.planner.foot_radius)
    for trial in range(1, n_max + 1):
        t0 = time.perf_counter()
        try:
            result = plan(problem, ctx, store, lam)
        except NoPath as exc:
            reports.append(TrialReport(trial, False, None, 0, None, None, 0, time.perf_counter() - t0, reason=str(exc)))
            continue
        t_search = result.stats.wall_time
        labels = ctx.center_labels(result.landings()) if result.edges else np.zeros(0, dtype=int)
        n_np = int(np.sum(labels == int(QueryLabel.NON_PASSABLE)))
        rep = TrialReport(trial, False, None, len(result.edges), None, None, n_np, t_search)
        to_cost = 0.0
        for i, edge in enumerate(result.edges):
            sol = solve_transition(edge.source, edge.dest, scene, cfg.to)
            rep.to_times.append(sol.wall_time)
            rep.statuses.append(sol.status.value)
            if sol.status is SolveStatus.INFEASIBLE:
                store.update(edge, Failed())
                rep.failed_at_edge = i
                break
            store.update(edge, Converged(sol.objective))
            to_cost += sol.objective
        else:
            rep.success = True
            rep.path_cost = float(result.total_cost)
            rep.to_cost = float(to_cost)
        reports.append(rep)
        if rep.success:
            break
    return reports


def trials_to_json(reports, include_time: bool = False) -> str:
    return json.dumps([r.to_dict(include_time) for r in reports], sort_keys=True, indent=2) + "\n"


__all__ = ["TrialConfig", "TrialReport", "run_offline_trials", "trials_to_json"]
