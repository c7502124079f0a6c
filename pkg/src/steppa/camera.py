"""Pinhole camera: intrinsics, extrinsics, jittered trajectories and projection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry.primitives import euler_to_matrix

DEFAULT_HEIGHT = 0.325
DEFAULT_PITCH = -math.radians(30.0)  # body pitch, positive looks up

# body frame (x forward, y left, z up) -> optical frame (x right, y down, z forward)
BODY_TO_OPTICAL = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class Intrinsics:
    fx: float = 212.0
    fy: float = 212.0
    cx: float = 212.0
    cy: float = 120.0
    width: int = 424
    height: int = 240

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def scaled(self, width: int, height: int) -> Intrinsics:
        """Same field of view at a different raster size."""
        sx, sy = width / self.width, height / self.height
        return Intrinsics(self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy, width, height)

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy, "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> Intrinsics:
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]), int(d["width"]), int(d["height"]))


@dataclass(frozen=True, eq=False)
class CameraPose:
    """World-to-camera extrinsics ``p_c = R_CW p_w + t_CW`` (optical frame)."""

    R_CW: np.ndarray
    t_CW: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        R = np.asarray(self.R_CW, dtype=float).reshape(3, 3)
        t = np.asarray(self.t_CW, dtype=float).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9, rtol=0) or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("R_CW must be a proper rotation")
        object.__setattr__(self, "R_CW", R)
        object.__setattr__(self, "t_CW", t)

    @property
    def center(self) -> np.ndarray:
        """Camera centre in world frame."""
        return -self.R_CW.T @ self.t_CW

    @classmethod
    def from_body(cls, x, y, z, roll=0.0, pitch=0.0, yaw=0.0, timestamp=0.0) -> CameraPose:
        """Pose from a camera body frame placed at (x, y, z) with body-frame Euler angles.

        Pitch follows the aviation convention (positive nose up), so a camera
        looking at the ground has negative pitch.
        """
        R_WB = euler_to_matrix(roll, -pitch, yaw)
        R_WC = R_WB @ BODY_TO_OPTICAL.T
        R_CW = R_WC.T
        return cls(R_CW, -R_CW @ np.array([x, y, z], dtype=float), timestamp)

    def body_angles(self) -> tuple[float, float, float]:
        """(roll, pitch, yaw) inverse of ``from_body``."""
        R_WB = self.R_CW.T @ BODY_TO_OPTICAL
        sp = -R_WB[2, 0]
        pitch_ry = math.asin(max(-1.0, min(1.0, sp)))
        roll = math.atan2(R_WB[2, 1], R_WB[2, 2])
        yaw = math.atan2(R_WB[1, 0], R_WB[0, 0])
        return roll, -pitch_ry, yaw

    def transformed(self, R: np.ndarray, t: np.ndarray) -> CameraPose:
        """The pose after moving the world by ``p -> R p + t``."""
        R_new = self.R_CW @ R.T
        return CameraPose(R_new, self.t_CW - R_new @ t, self.timestamp)

    def to_dict(self) -> dict:
        return {"R": [float(v) for v in self.R_CW.ravel()], "t": [float(v) for v in self.t_CW], "timestamp": float(self.timestamp)}

    @classmethod
    def from_dict(cls, d: dict) -> CameraPose:
        return cls(np.array(d["R"], dtype=float).reshape(3, 3), np.array(d["t"], dtype=float), float(d.get("timestamp", 0.0)))


@dataclass(frozen=True)
class JitterConfig:
    sigma_x: float = 0.01
    sigma_y: float = 0.01
    sigma_z: float = 0.01
    sigma_roll: float = 0.0175
    sigma_pitch: float = 0.0175
    sigma_yaw: float = 0.0175

    def __post_init__(self):
        if any(s < 0 for s in self.sigmas):
            raise ValueError("jitter standard deviations must be >= 0")

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_y, self.sigma_z, self.sigma_roll, self.sigma_pitch, self.sigma_yaw])

    @classmethod
    def zero(cls) -> JitterConfig:
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Waypoint:
    """Nominal camera body pose (x, y, z, roll, pitch, yaw) at time t."""

    t: float
    pose: tuple

    def __post_init__(self):
        object.__setattr__(self, "pose", tuple(float(v) for v in self.pose))
        if len(self.pose) != 6:
            raise ValueError("waypoint pose needs 6 values")


@dataclass(frozen=True)
class CameraTrajectory:
    waypoints: tuple
    frames_per_scene: int = 5

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if not self.waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        ts = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("waypoint timestamps must be strictly increasing")
        if self.frames_per_scene < 1:
            raise ValueError("frames_per_scene must be >= 1")

    def nominal(self) -> list[tuple[float, np.ndarray]]:
        """(time, 6-vector) per frame, linearly interpolated between waypoints."""
        ts = np.array([w.t for w in self.waypoints])
        P = np.array([w.pose for w in self.waypoints])
        n = self.frames_per_scene
        if len(ts) == 1:
            times = ts[0] + np.arange(n, dtype=float)
        else:
            times = np.linspace(ts[0], ts[-1], n) if n > 1 else ts[:1]
        out = []
        for t in times:
            out.append((float(t), np.array([np.interp(t, ts, P[:, j]) for j in range(6)])))
        return out

    @classmethod
    def straight(cls, start_xy, end_xy, height=DEFAULT_HEIGHT, pitch=DEFAULT_PITCH, frames=5, duration=4.0):
        """Torso-like straight walk between two floor points."""
        sx, sy = start_xy
        ex, ey = end_xy
        yaw = math.atan2(ey - sy, ex - sx) if (ex, ey) != (sx, sy) else 0.0
        return cls(
            (Waypoint(0.0, (sx, sy, height, 0.0, pitch, yaw)), Waypoint(duration, (ex, ey, height, 0.0, pitch, yaw))),
            frames,
        )


@dataclass(frozen=True)
class InFrame:
    u: float
    v: float


@dataclass(frozen=True)
class OutOfFrame:
    u: float = math.nan
    v: float = math.nan


@dataclass(frozen=True)
class BehindCamera:
    pass


PixelResult = InFrame | OutOfFrame | BehindCamera


def default_rig(intrinsics: Intrinsics | None = None) -> tuple[Intrinsics, CameraPose]:
    return intrinsics or Intrinsics(), CameraPose.from_body(0.0, 0.0, DEFAULT_HEIGHT, 0.0, DEFAULT_PITCH, 0.0)


def trajectory_poses(traj: CameraTrajectory, jitter: JitterConfig, rng: np.random.Generator) -> list[CameraPose]:
    sig = jitter.sigmas
    poses = []
    for t, nominal in traj.nominal():
        noise = rng.normal(0.0, 1.0, size=6) * sig
        x, y, z, roll, pitch, yaw = nominal + noise
        poses.append(CameraPose.from_body(x, y, z, roll, pitch, yaw, timestamp=t))
    return poses


def project(p, K: Intrinsics, pose: CameraPose) -> PixelResult:
    x, y, w = K.K @ (pose.R_CW @ np.asarray(p, dtype=float) + pose.t_CW)
    if w <= 0:
        return BehindCamera()
    u, v = x / w, y / w
    if 0 <= u < K.width and 0 <= v < K.height:
        return InFrame(float(u), float(v))
    return OutOfFrame(float(u), float(v))


# status codes of the vectorized projection
IN_FRAME, OUT_OF_FRAME, BEHIND = 0, 1, 2


def project_points(points, K: Intrinsics, pose: CameraPose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``project`` for an (n, 3) array: returns (u, v, status)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    h = (pts @ pose.R_CW.T + pose.t_CW) @ K.K.T
    w = h[:, 2]
    front = w > 0
    safe_w = np.where(front, w, 1.0)
    u = np.where(front, h[:, 0] / safe_w, np.nan)
    v = np.where(front, h[:, 1] / safe_w, np.nan)
    inside = front & (u >= 0) & (u < K.width) & (v >= 0) & (v < K.height)
    status = np.where(inside, IN_FRAME, np.where(front, OUT_OF_FRAME, BEHIND))
    return u, v, status


def pixel_rays(K: Intrinsics, pose: CameraPose, u=None, v=None) -> tuple[np.ndarray, np.ndarray]:
    """World-frame ray origin and directions through pixel centres.

    Directions are scaled so that the ray parameter equals camera-frame depth.
    With ``u``/``v`` omitted every pixel is returned in row-major order.
    """
    if u is None:
        vv, uu = np.mgrid[0 : K.height, 0 : K.width]
        u, v = uu.ravel(), vv.ravel()
    u = np.asarray(u, dtype=float) + 0.5
    v = np.asarray(v, dtype=float) + 0.5
    d_cam = np.stack([(u - K.cx) / K.fx, (v - K.cy) / K.fy, np.ones_like(u)], axis=-1)
    return pose.center, d_cam @ pose.R_CW
