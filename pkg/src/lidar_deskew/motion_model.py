"""Constant-velocity unicycle kinematics and sweep de-skewing.

Everything here is a pure function over value types.  The closed-form arc
integration switches to a 2-term Taylor series for small rotation angles so
that the translation terms stay accurate through the straight-line limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Sanity limits for velocities accepted at construction.
V_LIMIT = 10.0  # m/s
W_LIMIT = 10.0  # rad/s

# Default sensor range bounds for individual measurements.
RANGE_MIN = 0.05  # m
RANGE_MAX = 30.0  # m

# Below this rotation angle the arc terms use their Taylor series.
SMALL_ANGLE = 1e-4  # rad


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class BodyVelocity:
    """Planar body velocity: forward speed `v` (m/s) and yaw rate `w` (rad/s)."""

    v: float
    w: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.w)):
            raise ValueError("velocity components must be finite")
        if abs(self.v) > V_LIMIT or abs(self.w) > W_LIMIT:
            raise ValueError(
                f"velocity ({self.v}, {self.w}) exceeds sanity limits "
                f"(|v| <= {V_LIMIT}, |w| <= {W_LIMIT})"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.w], dtype=float)


@dataclass(frozen=True)
class Pose2:
    """2D pose (x, y, theta) with theta normalized to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not all(math.isfinite(f) for f in (self.x, self.y, self.theta)):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def compose(self, other: "Pose2") -> "Pose2":
        """Return self ∘ other (other expressed in self's frame)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Map points (N, 2) from this pose's frame into the parent frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot = np.array([[c, -s], [s, c]])
        return pts @ rot.T + np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)


@dataclass(frozen=True)
class RayMeasurement:
    """A single beam: range (m), beam angle (rad, [-pi, pi)), timestamp (s)."""

    range: float
    beam_angle: float
    timestamp: float

    def __post_init__(self):
        if not all(math.isfinite(f) for f in (self.range, self.beam_angle, self.timestamp)):
            raise ValueError("measurement fields must be finite")
        if not (RANGE_MIN <= self.range <= RANGE_MAX):
            raise ValueError(f"range {self.range} outside [{RANGE_MIN}, {RANGE_MAX}]")
        if not (-math.pi <= self.beam_angle < math.pi):
            raise ValueError(f"beam angle {self.beam_angle} outside [-pi, pi)")
        if self.timestamp < 0.0:
            raise ValueError("timestamp must be >= 0")


class SweepScan:
    """Time-ordered beam sequence covering one or more revolutions.

    Backed by flat arrays (timestamps, angles, ranges) so the estimation hot
    path never touches per-beam objects.
    """

    __slots__ = ("timestamps", "angles", "ranges", "sweep_start")

    def __init__(self, timestamps, angles, ranges, sweep_start: float):
        self.timestamps = np.asarray(timestamps, dtype=float)
        self.angles = np.asarray(angles, dtype=float)
        self.ranges = np.asarray(ranges, dtype=float)
        self.sweep_start = float(sweep_start)
        n = self.timestamps.shape[0]
        if self.angles.shape != (n,) or self.ranges.shape != (n,):
            raise ValueError("timestamps, angles, ranges must have equal length")
        if n and np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if n and self.sweep_start > self.timestamps[0]:
            raise ValueError("sweep_start must not exceed the first timestamp")
        if np.any(self.ranges < RANGE_MIN) or np.any(self.ranges > RANGE_MAX):
            raise ValueError("ranges outside sensor bounds")

    @classmethod
    def from_measurements(
        cls, measurements: Iterable[RayMeasurement], sweep_start: float | None = None
    ) -> "SweepScan":
        ms = list(measurements)
        if sweep_start is None:
            sweep_start = ms[0].timestamp if ms else 0.0
        return cls(
            [m.timestamp for m in ms],
            [m.beam_angle for m in ms],
            [m.range for m in ms],
            sweep_start,
        )

    @property
    def measurements(self) -> tuple[RayMeasurement, ...]:
        return tuple(
            RayMeasurement(r, a, t)
            for t, a, r in zip(self.timestamps, self.angles, self.ranges)
        )

    def __len__(self) -> int:
        return self.timestamps.shape[0]

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1] - self.sweep_start) if len(self) else 0.0


def _arc_terms(theta: np.ndarray):
    """sin(t)/t and (1-cos(t))/t with series fallback near zero."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    s = np.where(small, 1.0 - theta * theta / 6.0, np.sin(safe) / safe)
    c = np.where(small, theta / 2.0 - theta**3 / 24.0, (1.0 - np.cos(safe)) / safe)
    return s, c


def _arc_terms_deriv(theta: np.ndarray):
    """d/dtheta of the arc terms, with series fallback near zero."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    ds = np.where(
        small,
        -theta / 3.0 + theta**3 / 30.0,
        (safe * np.cos(safe) - np.sin(safe)) / (safe * safe),
    )
    dc = np.where(
        small,
        0.5 - theta * theta / 8.0,
        (safe * np.sin(safe) - 1.0 + np.cos(safe)) / (safe * safe),
    )
    return ds, dc


def pose_at(vel: BodyVelocity, dt: float) -> Pose2:
    """Pose reached after `dt` seconds of constant (v, w), starting at identity.

    `dt` may be negative (backward extrapolation along the same arc).
    """
    if not math.isfinite(dt):
        raise ValueError("dt must be finite")
    theta = vel.w * dt
    s, c = _arc_terms(np.array(theta))
    length = vel.v * dt
    return Pose2(length * float(s), length * float(c), theta)


def pose_params(v: float, w: float, dts: np.ndarray):
    """Vectorized pose components (tx, ty, theta) for an array of time offsets."""
    dts = np.asarray(dts, dtype=float)
    theta = w * dts
    s, c = _arc_terms(theta)
    length = v * dts
    return length * s, length * c, theta


def beam_endpoints(
    v: float, w: float, dts: np.ndarray, ranges: np.ndarray, angles: np.ndarray
) -> np.ndarray:
    """Endpoints (N, 2) of beams fired at offsets `dts` from the anchor pose."""
    tx, ty, theta = pose_params(v, w, dts)
    phi = theta + angles
    return np.stack([ranges * np.cos(phi) + tx, ranges * np.sin(phi) + ty], axis=1)


def beam_endpoints_with_jacobian(
    v: float, w: float, dts: np.ndarray, ranges: np.ndarray, angles: np.ndarray
):
    """Endpoints plus their derivatives w.r.t. (v, w).

    Returns (p, dp_dv, dp_dw), each of shape (N, 2).
    """
    dts = np.asarray(dts, dtype=float)
    theta = w * dts
    s, c = _arc_terms(theta)
    ds, dc = _arc_terms_deriv(theta)
    phi = theta + angles
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)
    p = np.stack([ranges * cos_phi + v * dts * s, ranges * sin_phi + v * dts * c], axis=1)
    dp_dv = np.stack([dts * s, dts * c], axis=1)
    dts2 = dts * dts
    dp_dw = np.stack(
        [-ranges * sin_phi * dts + v * dts2 * ds, ranges * cos_phi * dts + v * dts2 * dc],
        axis=1,
    )
    return p, dp_dv, dp_dw


def endpoint(vel: BodyVelocity, z: RayMeasurement, t_origin: float) -> np.ndarray:
    """Beam endpoint in the frame of the pose at `t_origin`."""
    dt = z.timestamp - t_origin
    return beam_endpoints(
        vel.v, vel.w, np.array([dt]), np.array([z.range]), np.array([z.beam_angle])
    )[0]


def deskew_scan(scan: SweepScan, vel: BodyVelocity) -> np.ndarray:
    """De-skew a sweep: all endpoints expressed in the sweep-start frame.

    Returns an (N, 2) array, one row per measurement, order preserved.
    """
    if len(scan) == 0:
        raise ValueError("cannot de-skew an empty scan")
    dts = scan.timestamps - scan.sweep_start
    return beam_endpoints(vel.v, vel.w, dts, scan.ranges, scan.angles)


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped pose sequence; timestamps strictly increasing."""

    timestamps: np.ndarray  # (N,)
    poses: np.ndarray  # (N, 3) rows of (x, y, theta)

    def __post_init__(self):
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype=float))
        object.__setattr__(self, "poses", np.asarray(self.poses, dtype=float))
        if self.poses.shape != (self.timestamps.shape[0], 3):
            raise ValueError("poses must be (N, 3) matching timestamps")
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("trajectory timestamps must be strictly increasing")

    @classmethod
    def from_poses(cls, stamped: Sequence[tuple[float, Pose2]]) -> "Trajectory":
        ts = [t for t, _ in stamped]
        ps = [[p.x, p.y, p.theta] for _, p in stamped]
        return cls(np.array(ts), np.array(ps))

    @property
    def positions(self) -> np.ndarray:
        return self.poses[:, :2]

    def __len__(self) -> int:
        return self.timestamps.shape[0]
