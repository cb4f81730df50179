"""Synthetic sweep generation: exact ray casting from a moving unicycle.

Worlds are flat lists of 2D segments.  Beams fire at evenly spaced times
while the base follows its constant-velocity arc, so the recorded sweep
carries the same skew a real slow sensor would.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ScanFormatError, SimulationDomainError
from .motion_model import (
    BodyVelocity,
    Pose2,
    SweepScan,
    Trajectory,
    beam_endpoints,
    pose_params,
)

WORLD_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class WorldModel:
    """Segment soup (M, 2, 2): [segment, endpoint, xy] in the world frame."""

    segments: np.ndarray

    def __post_init__(self):
        segs = np.asarray(self.segments, dtype=float).reshape(-1, 2, 2)
        lengths = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
        if np.any(lengths <= 0.0):
            raise ValueError("world segments must have nonzero length")
        object.__setattr__(self, "segments", segs)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        pts = self.segments.reshape(-1, 2)
        return pts.min(axis=0), pts.max(axis=0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": WORLD_SCHEMA_VERSION,
                "segments": self.segments.tolist(),
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "WorldModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScanFormatError(f"world file is not valid JSON: {exc}", exc.lineno)
        if not isinstance(doc, dict) or "segments" not in doc:
            raise ScanFormatError("world file must be an object with a 'segments' key")
        if doc.get("version") != WORLD_SCHEMA_VERSION:
            raise ScanFormatError(
                f"unsupported world schema version {doc.get('version')!r}"
            )
        return cls(np.array(doc["segments"], dtype=float))

    @classmethod
    def load(cls, path: str | Path) -> "WorldModel":
        return cls.from_json(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _rect(cx: float, cy: float, w: float, h: float, angle: float = 0.0) -> list:
    c, s = math.cos(angle), math.sin(angle)
    half = np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]])
    rot = np.array([[c, -s], [s, c]])
    corners = half @ rot.T + np.array([cx, cy])
    return [[corners[k].tolist(), corners[(k + 1) % 4].tolist()] for k in range(4)]


def default_room() -> WorldModel:
    """10 m x 8 m room with two interior obstacles (one rotated).

    The obstacle faces break the wall symmetry so both velocity components
    stay observable from a single window.
    """
    segments = _rect(0.0, 0.0, 10.0, 8.0)
    segments += _rect(2.6, 1.6, 1.2, 0.8, angle=math.radians(25.0))
    segments += _rect(-2.3, -1.7, 1.0, 1.6, angle=math.radians(-15.0))
    return WorldModel(np.array(segments))


@dataclass(frozen=True)
class SensorConfig:
    sweep_hz: float = 10.0
    beams_per_rev: int = 360
    range_noise_sigma: float = 0.01
    min_range: float = 0.05
    max_range: float = 30.0

    def __post_init__(self):
        if self.sweep_hz <= 0.0:
            raise ValueError("sweep_hz must be positive")
        if self.beams_per_rev < 8:
            raise ValueError("beams_per_rev must be >= 8")
        if self.range_noise_sigma < 0.0:
            raise ValueError("range_noise_sigma must be >= 0")


@dataclass(frozen=True)
class GroundTruthBundle:
    scan: SweepScan
    true_velocity: BodyVelocity
    true_endpoints: np.ndarray  # (N, 2), sweep-start frame, one per returned beam
    true_poses: Trajectory  # sensor poses in the sweep-start frame


def raycast_many(
    world: WorldModel, origins: np.ndarray, directions: np.ndarray, max_range: float
) -> np.ndarray:
    """Closest positive hit distance per ray; NaN where nothing is hit."""
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    directions = np.atleast_1d(np.asarray(directions, dtype=float))
    d = np.stack([np.cos(directions), np.sin(directions)], axis=1)  # (N, 2)

    a = world.segments[:, 0]  # (M, 2)
    ab = world.segments[:, 1] - a  # (M, 2)
    ao = a[None, :, :] - origins[:, None, :]  # (N, M, 2)

    denom = d[:, None, 0] * ab[None, :, 1] - d[:, None, 1] * ab[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = (ao[:, :, 0] * ab[None, :, 1] - ao[:, :, 1] * ab[None, :, 0]) / denom
        s = (ao[:, :, 0] * d[:, None, 1] - ao[:, :, 1] * d[:, None, 0]) / denom
    valid = (np.abs(denom) > 1e-300) & (s >= 0.0) & (s <= 1.0) & (t > 0.0)
    t = np.where(valid & (t <= max_range), t, np.inf)
    best = t.min(axis=1)
    return np.where(np.isfinite(best), best, np.nan)


def raycast(world: WorldModel, origin, direction: float, max_range: float = 30.0):
    """Range to the nearest segment along one ray, or None on a miss."""
    if not math.isfinite(direction):
        raise ValueError("direction must be finite")
    r = raycast_many(world, np.asarray(origin, dtype=float), np.array([direction]),
                     max_range)[0]
    return None if math.isnan(r) else float(r)


def simulate_sweep(
    world: WorldModel,
    vel: BodyVelocity,
    sensor: SensorConfig | None = None,
    n_revs: int = 2,
    seed: int = 0,
    start_pose: Pose2 = Pose2(0.0, 0.0, 0.0),
) -> GroundTruthBundle:
    """Simulate `n_revs` revolutions of a skewed sweep, with ground truth.

    Beam i fires at t_i = i / (beams_per_rev * sweep_hz) with beam angle
    2*pi*i / beams_per_rev, from the pose the base has reached at t_i.
    Recorded ranges carry additive Gaussian noise; the ground-truth
    endpoints are noiseless and expressed in the sweep-start frame.
    """
    sensor = sensor or SensorConfig()
    n = n_revs * sensor.beams_per_rev
    i = np.arange(n)
    times = i / (sensor.beams_per_rev * sensor.sweep_hz)
    alphas = (2.0 * math.pi * i / sensor.beams_per_rev) % (2.0 * math.pi)
    alphas = np.where(alphas >= math.pi, alphas - 2.0 * math.pi, alphas)

    tx, ty, theta = pose_params(vel.v, vel.w, times)
    rel = np.stack([tx, ty], axis=1)
    world_pos = start_pose.transform(rel)
    world_heading = start_pose.theta + theta

    lo, hi = world.bounds()
    if np.any(world_pos < lo) or np.any(world_pos > hi):
        raise SimulationDomainError("robot path exits the world's bounded region")

    true_ranges = raycast_many(world, world_pos, world_heading + alphas,
                               sensor.max_range)
    hit = np.isfinite(true_ranges) & (true_ranges >= sensor.min_range)

    times, alphas, true_ranges = times[hit], alphas[hit], true_ranges[hit]
    tx, ty, theta = tx[hit], ty[hit], theta[hit]

    rng = np.random.default_rng(seed)
    noisy = true_ranges + rng.normal(0.0, sensor.range_noise_sigma, true_ranges.shape)
    noisy = np.clip(noisy, sensor.min_range, sensor.max_range)

    scan = SweepScan(times, alphas, noisy, sweep_start=0.0)
    true_endpoints = beam_endpoints(vel.v, vel.w, times, true_ranges, alphas)
    true_poses = Trajectory(times, np.stack([tx, ty, theta], axis=1))
    return GroundTruthBundle(scan, vel, true_endpoints, true_poses)
