"""Contact modes, transitions and plan results."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

NOMINAL_COM_HEIGHT = 0.30


class FootId(enum.IntEnum):
    LF = 0
    RF = 1
    LH = 2
    RH = 3


FEET = tuple(FootId)
# crawl gait: each foot swings in turn
GAIT_ORDER = (FootId.LF, FootId.RH, FootId.RF, FootId.LH)
# body-frame (forward, left) offsets of the nominal stance
NOMINAL_OFFSETS = {
    FootId.LF: (0.19, 0.11),
    FootId.RF: (0.19, -0.11),
    FootId.LH: (-0.19, 0.11),
    FootId.RH: (-0.19, -0.11),
}


def next_swing(foot: FootId) -> FootId:
    return GAIT_ORDER[(GAIT_ORDER.index(foot) + 1) % 4]


def nominal_stance(x: float, y: float, yaw: float) -> np.ndarray:
    """(4, 2) nominal xy foot positions for a torso at (x, y) with heading ``yaw``."""
    c, s = math.cos(yaw), math.sin(yaw)
    out = np.zeros((4, 2))
    for f in FEET:
        dx, dy = NOMINAL_OFFSETS[f]
        out[f] = (x + c * dx - s * dy, y + s * dx + c * dy)
    return out


@dataclass(frozen=True)
class ModeFamily:
    """Contact set: which object each contacting foot touches."""

    contacts: tuple  # ((FootId, object id), ...) sorted by foot

    def __post_init__(self):
        contacts = tuple(sorted((FootId(f), int(o)) for f, o in self.contacts))
        if not 1 <= len(contacts) <= 3:
            raise ValueError("a mode family holds between one and three contacts")
        object.__setattr__(self, "contacts", contacts)

    @property
    def feet(self) -> tuple:
        return tuple(f for f, _ in self.contacts)

    def key(self) -> str:
        return ",".join(f"{f.name}:{o}" for f, o in self.contacts)


@dataclass(frozen=True)
class Coparameters:
    positions: tuple  # ((FootId, (x, y, z)), ...) sorted by foot

    def as_dict(self) -> dict:
        return {f: np.array(p) for f, p in self.positions}


@dataclass(frozen=True)
class Mode:
    """A partial stance: ``swing_foot`` is lifted, the other three are in contact.

    ``stance`` keeps all four positions; the swing foot entry is where it
    lifted off, so consecutive modes chain into full stances.
    """

    stance: tuple  # 4 x (x, y, z)
    objects: tuple  # 4 object ids
    swing_foot: FootId

    def __post_init__(self):
        object.__setattr__(self, "stance", tuple(tuple(float(c) for c in p) for p in self.stance))
        object.__setattr__(self, "objects", tuple(int(o) for o in self.objects))
        object.__setattr__(self, "swing_foot", FootId(self.swing_foot))
        if len(self.stance) != 4 or len(self.objects) != 4:
            raise ValueError("a mode stores four foot positions and four object ids")

    @property
    def positions(self) -> np.ndarray:
        return np.array(self.stance)

    @property
    def contact_feet(self) -> tuple:
        return tuple(f for f in FEET if f != self.swing_foot)

    @property
    def family(self) -> ModeFamily:
        return ModeFamily(tuple((f, self.objects[f]) for f in self.contact_feet))

    @property
    def coparams(self) -> Coparameters:
        return Coparameters(tuple((f, self.stance[f]) for f in self.contact_feet))

    def com(self) -> np.ndarray:
        """Nominal CoM: stance centroid lifted by the nominal height."""
        return self.positions.mean(axis=0) + np.array([0.0, 0.0, NOMINAL_COM_HEIGHT])

    def to_dict(self) -> dict:
        return {
            "stance": [list(p) for p in self.stance],
            "objects": list(self.objects),
            "swing_foot": self.swing_foot.name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Mode:
        return cls(tuple(tuple(p) for p in d["stance"]), tuple(d["objects"]), FootId[d["swing_foot"]])


@dataclass(frozen=True)
class TransitionEdge:
    """``swing_foot`` lands; ``footholds`` is the full stance during the transition."""

    source: Mode
    dest: Mode
    swing_foot: FootId

    @property
    def footholds(self) -> np.ndarray:
        return self.dest.positions

    @property
    def landing(self) -> np.ndarray:
        return np.array(self.dest.stance[self.swing_foot])

    @property
    def liftoff(self) -> np.ndarray:
        return np.array(self.source.stance[self.swing_foot])

    def check(self) -> None:
        src, dst = self.source.positions, self.dest.positions
        moved = [f for f in FEET if not np.allclose(src[f], dst[f], atol=1e-12)]
        if moved != [self.swing_foot] or self.source.swing_foot != self.swing_foot:
            raise ValueError(f"edge must move exactly the swing foot {self.swing_foot.name}, moved {moved}")


@dataclass(frozen=True)
class EdgeWeightTerms:
    D: float
    d_com: float
    d_tau: float
    d_step: float
    lam: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if min(self.D, self.d_com, self.d_tau, self.d_step) < 0:
            raise ValueError("edge weight terms must be non-negative")

    @property
    def total(self) -> float:
        lD, lc, lt, ls = self.lam
        return lD * self.D + lc * self.d_com + lt * self.d_tau + ls * self.d_step

    def to_dict(self) -> dict:
        return {"D": self.D, "d_com": self.d_com, "d_tau": self.d_tau, "d_step": self.d_step}


@dataclass(frozen=True)
class TorsoPath:
    waypoints: np.ndarray  # (n, 3)

    def __post_init__(self):
        w = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)
        if w.shape[0] < 2:
            raise ValueError("a torso path needs at least two waypoints")
        object.__setattr__(self, "waypoints", w)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1).sum())

    def distance(self, points) -> np.ndarray:
        """Euclidean distance from each point to the polyline."""
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        a, b = self.waypoints[:-1], self.waypoints[1:]
        ab = b - a
        L2 = np.maximum((ab**2).sum(axis=1), 1e-18)
        t = np.clip(((p[:, None, :] - a[None]) * ab[None]).sum(axis=2) / L2, 0.0, 1.0)
        closest = a[None] + t[..., None] * ab[None]
        return np.linalg.norm(p[:, None, :] - closest, axis=2).min(axis=1)

    def arclength(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1))])

    def point_at(self, s) -> np.ndarray:
        cum = self.arclength()
        s = np.clip(np.asarray(s, dtype=float), 0.0, cum[-1])
        return np.stack([np.interp(s, cum, self.waypoints[:, j]) for j in range(3)], axis=-1)

    def heading_at(self, s) -> np.ndarray:
        cum = self.arclength()
        seg = np.clip(np.searchsorted(cum, np.asarray(s, dtype=float), side="right") - 1, 0, len(cum) - 2)
        d = self.waypoints[seg + 1] - self.waypoints[seg]
        return np.arctan2(d[..., 1], d[..., 0])

    def project(self, points) -> np.ndarray:
        """Arclength of the nearest polyline point for each xy."""
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        a, b = self.waypoints[:-1, :2], self.waypoints[1:, :2]
        ab = b - a
        L2 = np.maximum((ab**2).sum(axis=1), 1e-18)
        t = np.clip(((p[:, None, :2] - a[None]) * ab[None]).sum(axis=2) / L2, 0.0, 1.0)
        closest = a[None] + t[..., None] * ab[None]
        d = np.linalg.norm(p[:, None, :2] - closest, axis=2)
        seg = d.argmin(axis=1)
        cum = self.arclength()
        return cum[seg] + t[np.arange(len(p)), seg] * np.sqrt(L2[seg])


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    edges_relaxed: int = 0
    frontier_size: int = 0
    n_vertices: int = 0
    n_edges: int = 0
    wall_time: float = 0.0

    def to_dict(self, include_time: bool = False) -> dict:
        d = {
            "nodes_expanded": self.nodes_expanded,
            "edges_relaxed": self.edges_relaxed,
            "frontier_size": self.frontier_size,
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
        }
        if include_time:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class PlanResult:
    edges: list
    total_cost: float
    terms: list
    stats: SearchStats = field(default_factory=SearchStats)
    start: Mode | None = None

    def __post_init__(self):
        for a, b in zip(self.edges, self.edges[1:]):
            if a.dest != b.source:
                raise ValueError("plan edges do not chain")

    @property
    def modes(self) -> list:
        if not self.edges:
            return [self.start] if self.start is not None else []
        return [self.edges[0].source] + [e.dest for e in self.edges]

    def landings(self) -> np.ndarray:
        return np.array([e.landing for e in self.edges]).reshape(-1, 3)

    def to_dict(self, include_time: bool = False) -> dict:
        return {
            "edges": [
                {
                    "swing_foot": e.swing_foot.name,
                    "footholds": [list(map(float, p)) for p in e.footholds],
                    "objects": list(e.dest.objects),
                    "terms": t.to_dict(),
                    "cost": t.total,
                }
                for e, t in zip(self.edges, self.terms)
            ],
            "total_cost": float(self.total_cost),
            "start": self.start.to_dict() if self.start is not None else None,
            "stats": self.stats.to_dict(include_time),
        }
