"""Edge weights: experience, CoM travel, torso deviation and projected steppability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..camera import CameraPose, Intrinsics, project_points
from ..render.raycast import LabelMask, QueryLabel, mask_query_many
from .types import EdgeWeightTerms, TorsoPath

DEFAULT_FOOT_RADIUS = 0.02
DEFAULT_LAMBDA = (1.0, 1.0, 1.0, 1.0)

# per queried point; background pixels carry no information and count as not in frame
QUERY_WEIGHT = {
    QueryLabel.NON_PASSABLE: 1000.0,
    QueryLabel.PASSABLE: 100.0,
    QueryLabel.OUT_OF_FRAME: 5.0,
    QueryLabel.BACKGROUND: 5.0,
    QueryLabel.STEPPABLE: 1.0,
}
_WEIGHT_TABLE = np.array([QUERY_WEIGHT[QueryLabel(i)] for i in range(5)])


def inflation_offsets(foot_radius: float) -> np.ndarray:
    """Centre plus the four axis-aligned world offsets; just the centre when the radius is 0."""
    if foot_radius <= 0:
        return np.zeros((1, 3))
    r = foot_radius
    return np.array([[0, 0, 0], [r, 0, 0], [-r, 0, 0], [0, r, 0], [0, -r, 0]], dtype=float)


@dataclass(frozen=True, eq=False)
class MaskContext:
    """A steppability mask together with the camera it was observed from."""

    mask: LabelMask
    K: Intrinsics
    pose: CameraPose
    foot_radius: float = DEFAULT_FOOT_RADIUS

    def __post_init__(self):
        if (self.mask.height, self.mask.width) != (self.K.height, self.K.width):
            raise ValueError("mask does not match the intrinsics")
        if self.foot_radius < 0:
            raise ValueError("foot_radius must be >= 0")

    def query(self, points) -> np.ndarray:
        """QueryLabel codes of shape (n, n_offsets) for foothold centres ``points``."""
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        off = inflation_offsets(self.foot_radius)
        q = (pts[:, None, :] + off[None]).reshape(-1, 3)
        u, v, status = project_points(q, self.K, self.pose)
        return mask_query_many(self.mask, u, v, status).reshape(len(pts), len(off))

    def center_labels(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        u, v, status = project_points(pts, self.K, self.pose)
        return mask_query_many(self.mask, u, v, status)

    def foothold_weights(self, points) -> np.ndarray:
        """Per-foothold inflated weight d^l for each point."""
        return _WEIGHT_TABLE[self.query(points)].sum(axis=1)


def steppability_weight(edge, mask: LabelMask, K: Intrinsics, pose: CameraPose, foot_radius: float = DEFAULT_FOOT_RADIUS) -> float:
    """Sum over the four transition footholds of their inflated mask weights."""
    ctx = MaskContext(mask, K, pose, foot_radius)
    return float(ctx.foothold_weights(edge.footholds).sum())


def query_weights(labels) -> np.ndarray:
    return _WEIGHT_TABLE[np.asarray(labels, dtype=np.int64)]


def edge_weight(edge, mask_ctx: MaskContext | None, experience, torso_path: TorsoPath, lam=DEFAULT_LAMBDA) -> EdgeWeightTerms:
    """Scalar reference evaluation of one edge; the graph uses a vectorized twin."""
    D = experience.expected_cost(edge) if experience is not None else 0.0
    c_src, c_dst = edge.source.com(), edge.dest.com()
    d_com = float(np.linalg.norm(c_dst - c_src))
    d_tau = float(torso_path.distance(c_dst)[0])
    d_step = float(mask_ctx.foothold_weights(edge.footholds).sum()) if mask_ctx is not None else 0.0
    return EdgeWeightTerms(float(D), d_com, d_tau, d_step, tuple(float(x) for x in lam))
