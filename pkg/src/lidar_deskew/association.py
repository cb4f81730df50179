"""Patch-to-patch correspondence search.

A pair qualifies when the centers are close, the normals nearly parallel,
and the timestamps sufficiently separated; among qualifying partners the
one with the smallest-magnitude projective distance wins.  The candidate
gates are evaluated densely over all pairs in one vectorized pass, which
at room-scale patch counts (a few hundred) outruns any spatial index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scan_pipeline import PatchSet


@dataclass(frozen=True)
class AssociationConfig:
    tau_c: float = 0.5  # m, center distance gate
    tau_n: float = 0.9  # cosine gate on normal parallelism
    tau_t: float = 0.05  # s, minimum time separation

    def __post_init__(self):
        if self.tau_c <= 0.0 or self.tau_t <= 0.0:
            raise ValueError("tau_c and tau_t must be positive")
        if not (-1.0 < self.tau_n < 1.0):
            raise ValueError("tau_n must lie in (-1, 1)")


@dataclass(frozen=True)
class Correspondence:
    """An accepted patch pair and its signed projective distance (m)."""

    i: int
    j: int
    proj_dist: float


def find_correspondences(
    patches: PatchSet, cfg: AssociationConfig | None = None
) -> list[Correspondence]:
    """One-directional argmin association with unordered-pair dedup."""
    cfg = cfg or AssociationConfig()
    n = len(patches)
    if n < 2:
        return []
    centers = patches.centers
    normals = patches.normals
    times = patches.timestamps

    # Pairwise gates from BLAS products:
    #   ||c_i - c_j||^2 = ||c_i||^2 + ||c_j||^2 - 2 c_i.c_j
    dist_sq = centers @ centers.T
    c_norm_sq = np.diagonal(dist_sq).copy()
    dist_sq *= -2.0
    dist_sq += c_norm_sq[:, None]
    dist_sq += c_norm_sq[None, :]
    ok = dist_sq < cfg.tau_c * cfg.tau_c
    ok &= normals @ normals.T > cfg.tau_n
    ok &= np.abs(times[:, None] - times[None, :]) > cfg.tau_t
    np.fill_diagonal(ok, False)

    rows, cols = np.nonzero(ok)
    if rows.size == 0:
        return []
    # Signed projective distance only at gate-passing pairs:
    #   (c_i - c_j).(n_i + n_j) = c_i.n_i + c_i.n_j - c_j.n_i - c_j.n_j
    cn = centers @ normals.T  # cn[i, j] = c_i . n_j
    self_dot = np.diagonal(cn)
    proj = self_dot[rows] + cn[rows, cols] - cn[cols, rows] - self_dot[cols]

    # Per-row argmin of |proj| (rows from nonzero are already sorted).
    order = np.lexsort((np.abs(proj), rows))
    _, first_of_row = np.unique(rows[order], return_index=True)
    sel = order[first_of_row]
    bi, bj, bp = rows[sel], cols[sel], proj[sel]

    canonical = np.where(bi < bj, bi * n + bj, bj * n + bi)
    _, first = np.unique(canonical, return_index=True)
    first.sort()
    return [
        Correspondence(int(bi[k]), int(bj[k]), float(bp[k])) for k in first
    ]


def correspondence_arrays(corrs: list[Correspondence]):
    """Split a correspondence list into index arrays for vectorized solves."""
    if not corrs:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    idx = np.array([(c.i, c.j) for c in corrs], dtype=int)
    return idx[:, 0], idx[:, 1]
