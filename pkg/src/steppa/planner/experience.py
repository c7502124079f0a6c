"""Experience-based transition cost statistics."""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass

import numpy as np

DEFAULT_BIN = 0.10


@dataclass(frozen=True)
class Converged:
    cost: float


@dataclass(frozen=True)
class Failed:
    pass


@dataclass
class BinStats:
    count: int = 0
    mean: float = 0.0
    failures: int = 0

    def to_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "failures": self.failures}


def displacement_bin(delta, bin_size: float = DEFAULT_BIN) -> tuple:
    return tuple(int(math.floor(float(c) / bin_size + 1e-9)) for c in np.asarray(delta, dtype=float))


def edge_key(edge, bin_size: float = DEFAULT_BIN) -> str:
    """Family pair plus the binned swing-foot displacement."""
    b = displacement_bin(edge.landing - edge.liftoff, bin_size)
    return f"{edge.source.family.key()}|{edge.dest.family.key()}|{','.join(map(str, b))}"


class ExperienceStore:
    """Running-mean cost per (source family, dest family, displacement bin).

    Unseen keys report the prior ``D0``. A failed transition folds the
    penalty ``C_fail = 10 * D0 + 100`` into the mean.
    """

    def __init__(self, D0: float = 0.0, bin_size: float = DEFAULT_BIN):
        if D0 < 0:
            raise ValueError("D0 must be >= 0")
        self.D0 = float(D0)
        self.bin_size = float(bin_size)
        self.table: dict[str, BinStats] = {}
        self._lock = threading.Lock()

    @property
    def c_fail(self) -> float:
        return 10.0 * self.D0 + 100.0

    def key(self, edge) -> str:
        return edge_key(edge, self.bin_size)

    def lookup(self, key: str) -> float:
        s = self.table.get(key)
        return self.D0 if s is None or s.count == 0 else s.mean

    def expected_cost(self, edge) -> float:
        return self.lookup(self.key(edge))

    def stats(self, edge) -> BinStats:
        return self.table.get(self.key(edge), BinStats())

    def update(self, edge, outcome) -> None:
        if isinstance(outcome, Converged):
            cost, failed = float(outcome.cost), False
        elif isinstance(outcome, Failed):
            cost, failed = self.c_fail, True
        else:
            raise TypeError(f"unknown outcome {outcome!r}")
        if not math.isfinite(cost):
            raise ValueError("outcome cost must be finite")
        with self._lock:
            s = self.table.setdefault(self.key(edge), BinStats())
            s.count += 1
            s.mean += (cost - s.mean) / s.count
            if failed:
                s.failures += 1

    def snapshot(self) -> dict:
        with self._lock:
            return {k: BinStats(**v.to_dict()) for k, v in self.table.items()}

    def to_dict(self) -> dict:
        return {
            "D0": self.D0,
            "bin_size": self.bin_size,
            "table": {k: v.to_dict() for k, v in sorted(self.table.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ExperienceStore:
        store = cls(float(d.get("D0", 0.0)), float(d.get("bin_size", DEFAULT_BIN)))
        store.table = {k: BinStats(int(v["count"]), float(v["mean"]), int(v["failures"])) for k, v in d["table"].items()}
        return store

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> ExperienceStore:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
