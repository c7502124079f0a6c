"""Dataset export: frames along jittered trajectories, scene-level splits, manifest."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..camera import DEFAULT_HEIGHT, DEFAULT_PITCH, CameraTrajectory, Intrinsics, JitterConfig, trajectory_poses
from .io import encode_mask_png, encode_pfm
from .raycast import RenderConfig, raycast_frame

SPLITS = ("train", "val", "test")


class ExportError(OSError):
    def __init__(self, message: str, written: list):
        super().__init__(f"{message} ({len(written)} files written before the failure)")
        self.written = written


@dataclass(frozen=True)
class TrajectoryConfig:
    """Straight torso-like walk from the scene start towards its goal."""

    frames_per_scene: int = 5
    height: float = DEFAULT_HEIGHT
    pitch: float = DEFAULT_PITCH
    span: float = 1.0
    duration: float = 4.0

    def for_scene(self, scene) -> CameraTrajectory:
        sx, sy = scene.start.x, scene.start.y
        gx, gy = scene.goal.center[0], scene.goal.center[1]
        d = math.hypot(gx - sx, gy - sy)
        if d < 1e-9:
            ux, uy = math.cos(scene.start.yaw), math.sin(scene.start.yaw)
        else:
            ux, uy = (gx - sx) / d, (gy - sy) / d
        step = min(self.span, d) if d > 1e-9 else self.span
        return CameraTrajectory.straight(
            (sx, sy), (sx + step * ux, sy + step * uy), self.height, self.pitch, self.frames_per_scene, self.duration
        )


@dataclass(frozen=True)
class ManifestEntry:
    scene_id: str
    frame_index: int
    depth: str
    mask: str
    meta: str
    split: str

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "frame_index": self.frame_index,
            "depth": self.depth,
            "mask": self.mask,
            "meta": self.meta,
            "split": self.split,
        }


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    path: str | None = None

    def split_counts(self, by: str = "scene") -> dict:
        counts = {s: set() if by == "scene" else 0 for s in SPLITS}
        for e in self.entries:
            if by == "scene":
                counts[e.split].add(e.scene_id)
            else:
                counts[e.split] += 1
        return {s: (len(v) if by == "scene" else v) for s, v in counts.items()}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.entries)


def split_counts(n: int, ratios) -> list[int]:
    """Largest-remainder apportionment of ``n`` items to ``ratios``."""
    ratios = np.asarray(ratios, dtype=float)
    if np.any(ratios < 0) or abs(ratios.sum() - 1.0) > 1e-9:
        raise ValueError(f"split ratios must be >= 0 and sum to 1, got {ratios.tolist()}")
    raw = ratios * n
    base = np.floor(raw).astype(int)
    rest = n - int(base.sum())
    # ties go to the earlier split
    order = sorted(range(len(ratios)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:rest]:
        base[i] += 1
    return base.tolist()


def assign_splits(n_scenes: int, ratios, rng: np.random.Generator) -> list[str]:
    counts = split_counts(n_scenes, ratios)
    labels = [s for s, c in zip(SPLITS, counts) for _ in range(c)]
    perm = rng.permutation(n_scenes)
    out = [""] * n_scenes
    for slot, scene_index in enumerate(perm):
        out[int(scene_index)] = labels[slot]
    return out


def export_dataset(
    scenes,
    trajectory: TrajectoryConfig,
    jitter: JitterConfig,
    ratios,
    out_dir,
    seed: int = 0,
    intrinsics: Intrinsics | None = None,
    render: RenderConfig | None = None,
) -> DatasetManifest:
    """Render every scene along its trajectory and write depth, mask, metadata and manifest."""
    scenes = list(scenes)
    K = intrinsics or Intrinsics()
    split_ss, *scene_ss = np.random.SeedSequence(seed).spawn(len(scenes) + 1)
    splits = assign_splits(len(scenes), ratios, np.random.default_rng(split_ss))
    written: list = []
    manifest = DatasetManifest()
    try:
        os.makedirs(out_dir, exist_ok=True)
        for sub in ("depth", "mask", "meta") if scenes else ():
            os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
        for i, scene in enumerate(scenes):
            scene_id = f"scene_{i:04d}"
            poses = trajectory_poses(trajectory.for_scene(scene), jitter, np.random.default_rng(scene_ss[i]))
            for k, pose in enumerate(poses):
                frame = raycast_frame(scene, K, pose, render, scene_id=scene_id, frame_index=k)
                stem = f"{scene_id}_{k:02d}"
                rel = {"depth": f"depth/{stem}.pfm", "mask": f"mask/{stem}.png", "meta": f"meta/{stem}.json"}
                meta = frame.metadata() | {"split": splits[i], "scene_seed": scene.rng_seed}
                payloads = {
                    "depth": encode_pfm(frame.depth.depth),
                    "mask": encode_mask_png(frame.mask.values),
                    "meta": (json.dumps(meta, sort_keys=True, indent=2) + "\n").encode(),
                }
                for kind, rpath in rel.items():
                    full = os.path.join(out_dir, rpath)
                    with open(full, "wb") as fh:
                        fh.write(payloads[kind])
                    written.append(full)
                manifest.entries.append(ManifestEntry(scene_id, k, rel["depth"], rel["mask"], rel["meta"], splits[i]))
        manifest.path = os.path.join(out_dir, "manifest.jsonl")
        with open(manifest.path, "w") as fh:
            fh.write(manifest.to_jsonl())
    except OSError as exc:
        raise ExportError(f"export to {out_dir} failed: {exc}", written) from exc
    return manifest
