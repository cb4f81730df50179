"""Endpoint regularization and planar patch construction.

Patches are two-point chords: midpoint center, chord-perpendicular unit
normal, mean timestamp.  Regularization guarantees chords long enough for
a stable normal and breaks the chain at surface discontinuities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# 90-degree clockwise rotation applied to the normalized chord.
_CHORD_TO_NORMAL = np.array([[0.0, 1.0], [-1.0, 0.0]])

_DEGENERATE_CHORD = 1e-12


@dataclass(frozen=True)
class RegularizationConfig:
    """Chord-length thinning bounds (m).

    `break_policy` controls what happens at a gap wider than `max_gap`:
    "flag" retains the far endpoint but forbids a patch across the gap,
    "drop" discards it and restarts the chain at the next endpoint.
    """

    min_gap: float = 0.15
    max_gap: float = 0.4
    break_policy: str = "flag"

    def __post_init__(self):
        if not (0.0 < self.min_gap < self.max_gap):
            raise ValueError("require 0 < min_gap < max_gap")
        if self.break_policy not in ("flag", "drop"):
            raise ValueError("break_policy must be 'flag' or 'drop'")


@dataclass(frozen=True)
class PlanarPatch:
    """Local surface element: center, unit normal, mid-timestamp, source pair."""

    center: np.ndarray
    normal: np.ndarray
    timestamp: float
    src: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))
        if abs(float(np.linalg.norm(self.normal)) - 1.0) > 1e-9:
            raise ValueError("patch normal must be unit length")


class PatchSet:
    """Array-backed collection of planar patches (hot-path representation)."""

    __slots__ = ("centers", "normals", "timestamps", "src")

    def __init__(self, centers, normals, timestamps, src):
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        self.normals = np.asarray(normals, dtype=float).reshape(-1, 2)
        self.timestamps = np.asarray(timestamps, dtype=float).reshape(-1)
        self.src = np.asarray(src, dtype=int).reshape(-1, 2)

    def __len__(self) -> int:
        return self.timestamps.shape[0]

    def __getitem__(self, k: int) -> PlanarPatch:
        return PlanarPatch(
            self.centers[k], self.normals[k], float(self.timestamps[k]),
            (int(self.src[k, 0]), int(self.src[k, 1])),
        )


def regularize(endpoints: np.ndarray, cfg: RegularizationConfig | None = None):
    """Greedy forward thinning of an endpoint sequence.

    Returns (retained, break_before): indices of retained endpoints and a
    parallel boolean array; break_before[k] marks a surface discontinuity
    between retained[k-1] and retained[k] (no patch may span it).
    """
    cfg = cfg or RegularizationConfig()
    pts = np.asarray(endpoints, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 2:
        return np.empty(0, dtype=int), np.empty(0, dtype=bool)

    min_sq = cfg.min_gap * cfg.min_gap
    max_sq = cfg.max_gap * cfg.max_gap
    drop = cfg.break_policy == "drop"

    coords = pts.tolist()
    retained = [0]
    breaks = [False]
    ref_x, ref_y = coords[0]
    pending_break = False
    for i in range(1, len(coords)):
        px, py = coords[i]
        dx, dy = px - ref_x, py - ref_y
        d2 = dx * dx + dy * dy
        if d2 < min_sq:
            continue
        if d2 > max_sq and drop:
            # Discard the far endpoint; the chain restarts past the gap.
            ref_x, ref_y = px, py
            pending_break = True
            continue
        retained.append(i)
        breaks.append(d2 > max_sq or pending_break)
        ref_x, ref_y = px, py
        pending_break = False
    return np.array(retained, dtype=int), np.array(breaks, dtype=bool)


def patch_pairs(retained: np.ndarray, breaks: np.ndarray) -> np.ndarray:
    """Source index pairs (K, 2) for consecutive retained endpoints, skipping breaks."""
    if retained.shape[0] < 2:
        return np.empty((0, 2), dtype=int)
    keep = ~breaks[1:]
    return np.stack([retained[:-1][keep], retained[1:][keep]], axis=1)


def build_patches(
    endpoints: np.ndarray,
    timestamps: np.ndarray,
    retained: np.ndarray,
    breaks: np.ndarray,
) -> PatchSet:
    """Construct planar patches from consecutive retained endpoint pairs."""
    src = patch_pairs(retained, breaks)
    return build_patches_from_pairs(endpoints, timestamps, src)


def build_patches_from_pairs(
    endpoints: np.ndarray, timestamps: np.ndarray, src: np.ndarray
) -> PatchSet:
    pts = np.asarray(endpoints, dtype=float).reshape(-1, 2)
    ts = np.asarray(timestamps, dtype=float)
    src = np.asarray(src, dtype=int).reshape(-1, 2)
    pa, pb = pts[src[:, 0]], pts[src[:, 1]]
    chord = pb - pa
    length = np.linalg.norm(chord, axis=1)
    ok = length > _DEGENERATE_CHORD  # cannot occur after regularize, guarded anyway
    src, pa, pb, chord, length = src[ok], pa[ok], pb[ok], chord[ok], length[ok]
    unit = chord / length[:, None]
    normals = unit @ _CHORD_TO_NORMAL.T
    centers = 0.5 * (pa + pb)
    mid_ts = 0.5 * (ts[src[:, 0]] + ts[src[:, 1]])
    return PatchSet(centers, normals, mid_ts, src)
