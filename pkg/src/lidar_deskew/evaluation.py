"""Metrics and experiment drivers.

Covers point-to-point RMSE, the seeded velocity-grid experiment, 2D Horn
trajectory alignment, and ATE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DegenerateGeometryError, EstimationFailedError
from .motion_model import BodyVelocity, Pose2, Trajectory, deskew_scan
from .simulator import SensorConfig, WorldModel, default_room, simulate_sweep
from .solver import EstimatorConfig, estimate_velocity


def point_rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root-mean-square distance between index-aligned point clouds."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if a.shape != b.shape:
        raise ValueError(f"point cloud shapes differ: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(np.mean(np.einsum("ij,ij->i", d, d))))


def _associate_by_time(est: Trajectory, ref: Trajectory, max_dt: float):
    """Pair each estimated pose with the nearest reference pose in time."""
    ref_t = ref.timestamps
    pos = np.searchsorted(ref_t, est.timestamps)
    pos = np.clip(pos, 1, len(ref_t) - 1) if len(ref_t) > 1 else np.zeros_like(pos)
    left = ref_t[pos - 1] if len(ref_t) > 1 else ref_t[pos]
    right = ref_t[pos]
    take_right = np.abs(right - est.timestamps) <= np.abs(est.timestamps - left)
    nearest = np.where(take_right, pos, pos - 1)
    ok = np.abs(ref_t[nearest] - est.timestamps) <= max_dt
    return np.nonzero(ok)[0], nearest[ok]


def horn_align(est: Trajectory, ref: Trajectory, max_dt: float = 0.05) -> Pose2:
    """Closed-form rigid 2D transform T minimizing sum ||T(p_est) - p_ref||^2.

    Poses are associated by nearest timestamp within `max_dt`.
    """
    ei, ri = _associate_by_time(est, ref, max_dt)
    if ei.shape[0] < 2:
        raise AlignmentError(
            f"only {ei.shape[0]} pose pairs associated (need >= 2)"
        )
    pe = est.positions[ei]
    pr = ref.positions[ri]
    ce, cr = pe.mean(axis=0), pr.mean(axis=0)
    de, dr = pe - ce, pr - cr
    # 2D closed form: rotation from the cross-covariance terms.
    sin_sum = float(np.sum(de[:, 0] * dr[:, 1] - de[:, 1] * dr[:, 0]))
    cos_sum = float(np.sum(de[:, 0] * dr[:, 0] + de[:, 1] * dr[:, 1]))
    angle = math.atan2(sin_sum, cos_sum)
    c, s = math.cos(angle), math.sin(angle)
    tx = cr[0] - (c * ce[0] - s * ce[1])
    ty = cr[1] - (s * ce[0] + c * ce[1])
    return Pose2(tx, ty, angle)


def ate(est: Trajectory, ref: Trajectory, max_dt: float = 0.05) -> float:
    """Absolute trajectory error: position RMSE after best rigid alignment."""
    transform = horn_align(est, ref, max_dt)
    ei, ri = _associate_by_time(est, ref, max_dt)
    aligned = transform.transform(est.positions[ei])
    return point_rmse(aligned, ref.positions[ri])


@dataclass
class GridCellResult:
    v_cmd: float
    w_cmd: float
    v_mean: float
    v_std: float
    w_mean: float
    w_std: float
    rmse_deskewed: float
    rmse_skewed: float
    trials: int
    failures: int

    @property
    def failed(self) -> bool:
        return self.failures * 2 > self.trials


def _trial_seed(base_seed: int, cell_index: int, trial: int) -> int:
    return base_seed * 1_000_003 + cell_index * 1_009 + trial


def run_velocity_grid(
    v_set,
    w_set,
    trials: int = 20,
    world: WorldModel | None = None,
    sensor: SensorConfig | None = None,
    est_cfg: EstimatorConfig | None = None,
    n_revs: int = 2,
    base_seed: int = 0,
) -> list[GridCellResult]:
    """Seeded velocity-grid experiment over all (w, v) combinations.

    Per trial: simulate a skewed sweep, estimate the velocity from the
    range stream alone, then compare de-skewed and raw endpoints to the
    noiseless ground truth.  Cells where more than half the trials fail
    are marked failed but still reported.
    """
    v_set, w_set = list(v_set), list(w_set)
    if not v_set or not w_set:
        raise ValueError("v_set and w_set must be non-empty")
    if trials < 2:
        raise ValueError("need at least 2 trials per cell")
    world = world or default_room()
    sensor = sensor or SensorConfig()
    est_cfg = est_cfg or EstimatorConfig()

    results: list[GridCellResult] = []
    cell_index = 0
    for w_cmd in w_set:
        for v_cmd in v_set:
            vs, ws, rmse_d, rmse_s = [], [], [], []
            failures = 0
            for trial in range(trials):
                seed = _trial_seed(base_seed, cell_index, trial)
                bundle = simulate_sweep(
                    world, BodyVelocity(v_cmd, w_cmd), sensor, n_revs, seed
                )
                try:
                    report = estimate_velocity(bundle.scan, cfg=est_cfg)
                except (EstimationFailedError, DegenerateGeometryError):
                    failures += 1
                    continue
                est = report.velocity
                vs.append(est.v)
                ws.append(est.w)
                rmse_d.append(
                    point_rmse(deskew_scan(bundle.scan, est), bundle.true_endpoints)
                )
                rmse_s.append(
                    point_rmse(
                        deskew_scan(bundle.scan, BodyVelocity(0.0, 0.0)),
                        bundle.true_endpoints,
                    )
                )
            if vs:
                cell = GridCellResult(
                    v_cmd, w_cmd,
                    float(np.mean(vs)), float(np.std(vs, ddof=1)) if len(vs) > 1 else 0.0,
                    float(np.mean(ws)), float(np.std(ws, ddof=1)) if len(ws) > 1 else 0.0,
                    float(np.mean(rmse_d)), float(np.mean(rmse_s)),
                    trials, failures,
                )
            else:
                cell = GridCellResult(
                    v_cmd, w_cmd, math.nan, math.nan, math.nan, math.nan,
                    math.nan, math.nan, trials, failures,
                )
            results.append(cell)
            cell_index += 1
    return results


GRID_CSV_HEADER = (
    "v,w,v_mean,v_std,w_mean,w_std,rmse_deskewed,rmse_skewed,failures"
)


def grid_table_csv(results: list[GridCellResult]) -> str:
    lines = [GRID_CSV_HEADER]
    for r in results:
        lines.append(
            f"{r.v_cmd:.3f},{r.w_cmd:.3f},{r.v_mean:.6f},{r.v_std:.6f},"
            f"{r.w_mean:.6f},{r.w_std:.6f},{r.rmse_deskewed:.6f},"
            f"{r.rmse_skewed:.6f},{r.failures}"
        )
    return "\n".join(lines) + "\n"


def grid_table_text(results: list[GridCellResult]) -> str:
    """Human-readable table: rows are w, columns are v, 3 lines per cell."""
    v_vals = sorted({r.v_cmd for r in results})
    w_vals = sorted({r.w_cmd for r in results})
    by_key = {(r.w_cmd, r.v_cmd): r for r in results}
    col = 22
    header = "w \\ v".ljust(10) + "".join(f"{v:>{col}.3f}" for v in v_vals)
    lines = [header, "-" * len(header)]
    for w in w_vals:
        row_v, row_w, row_r = f"{w:>8.3f}  ", " " * 10, " " * 10
        for v in v_vals:
            r = by_key[(w, v)]
            if r.failed or math.isnan(r.v_mean):
                row_v += "failed".rjust(col)
                row_w += "".rjust(col)
                row_r += "".rjust(col)
            else:
                row_v += f"{r.v_mean:.3f}+-{r.v_std:.3f}".rjust(col)
                row_w += f"{r.w_mean:.3f}+-{r.w_std:.3f}".rjust(col)
                row_r += f"{r.rmse_deskewed:.3f}/{r.rmse_skewed:.3f}".rjust(col)
        lines += [row_v, row_w, row_r, ""]
    return "\n".join(lines)
