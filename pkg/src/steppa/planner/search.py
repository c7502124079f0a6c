"""Edge cost evaluation over a whole graph and A* search."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np

from .experience import displacement_bin
from .graph import ModeGraph
from .types import FEET, EdgeWeightTerms, PlanResult, SearchStats
from .weights import DEFAULT_LAMBDA, MaskContext


class NoPath(RuntimeError):
    def __init__(self, stats: SearchStats):
        self.stats = stats
        super().__init__(
            f"no path to goal: expanded {stats.nodes_expanded} of {stats.n_vertices} vertices, "
            f"frontier {stats.frontier_size}, {stats.n_edges} edges"
        )


@dataclass(frozen=True, eq=False)
class EdgeCosts:
    D: np.ndarray
    d_com: np.ndarray
    d_tau: np.ndarray
    d_step: np.ndarray
    lam: tuple

    @property
    def total(self) -> np.ndarray:
        lD, lc, lt, ls = self.lam
        return lD * self.D + lc * self.d_com + lt * self.d_tau + ls * self.d_step

    def terms(self, e: int) -> EdgeWeightTerms:
        return EdgeWeightTerms(float(self.D[e]), float(self.d_com[e]), float(self.d_tau[e]), float(self.d_step[e]), self.lam)


def _family_keys(graph: ModeGraph, verts: np.ndarray) -> list[str]:
    owners = graph.lattice.owners
    out = []
    for v in verts:
        k, sw = graph.keys[v], int(graph.swing[v])
        out.append(",".join(f"{f.name}:{int(owners[k[f]])}" for f in FEET if f != sw))
    return out


def experience_costs(graph: ModeGraph, experience) -> np.ndarray:
    if experience is None:
        return np.zeros(graph.n_edges)
    if not experience.table:
        return np.full(graph.n_edges, experience.D0)
    fam = _family_keys(graph, np.arange(graph.n_vertices))
    pts = graph.lattice.points
    e = np.arange(graph.n_edges)
    src_keys, dst_keys = graph.keys[graph.edge_src], graph.keys[graph.edge_dst]
    delta = pts[dst_keys[e, graph.edge_foot]] - pts[src_keys[e, graph.edge_foot]]
    out = np.empty(graph.n_edges)
    for i in range(graph.n_edges):
        b = displacement_bin(delta[i], experience.bin_size)
        key = f"{fam[graph.edge_src[i]]}|{fam[graph.edge_dst[i]]}|{','.join(map(str, b))}"
        out[i] = experience.lookup(key)
    return out


def edge_costs(graph: ModeGraph, mask_ctx: MaskContext | None, experience=None, lam=DEFAULT_LAMBDA) -> EdgeCosts:
    lam = tuple(float(x) for x in lam)
    if len(lam) != 4 or min(lam) < 0:
        raise ValueError("lambda needs four non-negative weights")
    com = graph.com()
    d_com = np.linalg.norm(com[graph.edge_dst] - com[graph.edge_src], axis=1)
    d_tau_v = graph.torso_path.distance(com)
    d_tau = d_tau_v[graph.edge_dst]
    if mask_ctx is not None and graph.n_edges:
        used = np.unique(graph.keys)
        w = np.zeros(len(graph.lattice))
        w[used] = mask_ctx.foothold_weights(graph.lattice.points[used])
        d_step = w[graph.keys[graph.edge_dst]].sum(axis=1)
    else:
        d_step = np.zeros(graph.n_edges)
    return EdgeCosts(experience_costs(graph, experience), d_com, d_tau, d_step, lam)


def search(graph: ModeGraph, costs: EdgeCosts, start: int = 0) -> PlanResult:
    """A* from ``start`` to any goal vertex.

    The heuristic ``lambda_CoM * max(0, |c - g| - r)`` never exceeds the
    remaining CoM term, so it is admissible and consistent. Ties on f are
    broken by fewer edges, then by the lower vertex id.
    """
    t0 = time.perf_counter()
    stats = SearchStats(n_vertices=graph.n_vertices, n_edges=graph.n_edges)
    total = costs.total
    offsets, order = graph.adjacency()
    goal_c = np.asarray(graph.goal.center, dtype=float)
    h = costs.lam[1] * np.maximum(0.0, np.linalg.norm(graph.com() - goal_c, axis=1) - graph.goal.radius)
    h = h.tolist()
    g = {start: 0.0}
    hops = {start: 0}
    parent = {}
    closed = set()
    heap = [(h[start], 0, start)]
    is_goal = graph.is_goal
    dst_list, total_list = graph.edge_dst.tolist(), total.tolist()
    found = None
    while heap:
        f, n_e, v = heapq.heappop(heap)
        if v in closed:
            continue
        closed.add(v)
        stats.nodes_expanded += 1
        if is_goal[v]:
            found = v
            break
        gv = g[v]
        for e in order[offsets[v] : offsets[v + 1]].tolist():
            w = dst_list[e]
            if w in closed:
                continue
            stats.edges_relaxed += 1
            cand = gv + total_list[e]
            old = g.get(w)
            if old is None or cand < old or (cand == old and n_e + 1 < hops[w]):
                g[w], hops[w], parent[w] = cand, n_e + 1, e
                heapq.heappush(heap, (cand + h[w], n_e + 1, w))
    stats.frontier_size = len(heap)
    stats.wall_time = time.perf_counter() - t0
    if found is None:
        raise NoPath(stats)
    path = []
    v = found
    while v != start:
        e = parent[v]
        path.append(e)
        v = int(graph.edge_src[e])
    path.reverse()
    edges = [graph.edge(e) for e in path]
    terms = [costs.terms(e) for e in path]
    return PlanResult(edges, float(g[found]), terms, stats, start=graph.mode(start))
