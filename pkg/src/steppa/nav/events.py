"""Navigation events and their CSV export."""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field


class EventKind(str, enum.Enum):
    BOUNDARY_REACHED = "BoundaryReached"
    FOOTHOLD_INVALIDATED = "FootholdInvalidated"
    GOAL_REACHED = "GoalReached"
    PLAN_FAILED = "PlanFailed"
    REPLANNED = "Replanned"


TRIGGERS = (EventKind.BOUNDARY_REACHED, EventKind.FOOTHOLD_INVALIDATED)


@dataclass(frozen=True)
class NavEvent:
    tick: int
    kind: EventKind
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tick": self.tick, "event": self.kind.value, "payload": self.payload}

    @classmethod
    def from_dict(cls, d: dict) -> NavEvent:
        return cls(int(d["tick"]), EventKind(d["event"]), dict(d.get("payload", {})))


def boundary_reached(tick: int, reason: str) -> NavEvent:
    return NavEvent(tick, EventKind.BOUNDARY_REACHED, {"reason": reason})


def foothold_invalidated(tick: int, edge_index: int, foothold, label: str) -> NavEvent:
    return NavEvent(
        tick,
        EventKind.FOOTHOLD_INVALIDATED,
        {"edge_index": int(edge_index), "foothold": [round(float(c), 9) for c in foothold], "label": label},
    )


def events_to_csv(events) -> str:
    """One row per event: tick, event name, JSON payload."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tick", "event", "payload"])
    for ev in events:
        w.writerow([ev.tick, ev.kind.value, json.dumps(ev.payload, sort_keys=True)])
    return buf.getvalue()


def check_causality(events) -> bool:
    """Every Replanned is preceded (since the previous one) by a trigger event."""
    armed = False
    for ev in events:
        if ev.kind in TRIGGERS:
            armed = True
        elif ev.kind is EventKind.REPLANNED:
            if not armed:
                return False
            armed = False
    return True
