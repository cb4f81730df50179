"""Plane-to-plane residuals, analytic Jacobians, and the IRLS/ICP estimator.

The outer loop alternates de-skewing + patch extraction + association with
an inner iteratively reweighted Gauss-Newton solve over (v, w).  Residuals
and Jacobians are evaluated in bulk over all correspondences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .association import (
    AssociationConfig,
    Correspondence,
    correspondence_arrays,
    find_correspondences,
)
from .errors import DegenerateGeometryError, EstimationFailedError
from .motion_model import (
    V_LIMIT,
    W_LIMIT,
    BodyVelocity,
    SweepScan,
    beam_endpoints,
    beam_endpoints_with_jacobian,
)
from .scan_pipeline import (
    PlanarPatch,
    RegularizationConfig,
    build_patches_from_pairs,
    patch_pairs,
    regularize,
)

_COND_LIMIT = 1e12
_MAX_BACKTRACKS = 8


@dataclass(frozen=True)
class SolverConfig:
    huber_delta: float = 0.1
    max_irls_iters: int = 10
    max_icp_rounds: int = 20
    convergence_tol: float = 1e-6
    damping: float = 1e-6
    # Optional per-component residual weighting; identity by default.
    residual_weights: tuple[float, float, float] | None = None

    def __post_init__(self):
        for name in ("huber_delta", "max_irls_iters", "max_icp_rounds",
                     "convergence_tol", "damping"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class EstimatorConfig:
    """Bundle of the three per-stage configurations."""

    regularization: RegularizationConfig = field(default_factory=RegularizationConfig)
    association: AssociationConfig = field(default_factory=AssociationConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class EstimateReport:
    velocity: BodyVelocity
    rounds: int
    final_cost: float
    correspondence_count: int
    cost_trace: list[list[float]]  # per association round, per IRLS iteration
    round_velocities: list[BodyVelocity]  # estimate after each round
    mean_abs_projective_residual: float


def patch_error(m_i: PlanarPatch, m_j: PlanarPatch) -> np.ndarray:
    """3-vector [projective offset; normal difference] between two patches."""
    e0 = 0.5 * float((m_i.center - m_j.center) @ (m_i.normal + m_j.normal))
    dn = m_j.normal - m_i.normal
    return np.array([e0, dn[0], dn[1]])


def huber_weight(residual_norm: float, delta: float) -> float:
    """IRLS weight of the Huber kernel: 1 inside delta, delta/norm outside."""
    if residual_norm <= delta:
        return 1.0
    return delta / residual_norm


def huber_cost(norms: np.ndarray, delta: float) -> float:
    """Total Huber cost over residual norms."""
    norms = np.asarray(norms, dtype=float)
    quad = norms <= delta
    cost = np.where(quad, 0.5 * norms * norms, delta * (norms - 0.5 * delta))
    return float(np.sum(cost))


def _patch_geometry(p, src):
    pa, pb = p[src[:, 0]], p[src[:, 1]]
    chord = pb - pa
    length = np.linalg.norm(chord, axis=1)
    unit = chord / length[:, None]
    normals = np.stack([unit[:, 1], -unit[:, 0]], axis=1)
    centers = 0.5 * (pa + pb)
    return centers, normals, unit, length


def _patch_geometry_grad(dp, src, unit, length):
    """Center/normal derivatives for one velocity component."""
    da, db = dp[src[:, 0]], dp[src[:, 1]]
    dd = db - da
    du = (dd - unit * np.einsum("ij,ij->i", unit, dd)[:, None]) / length[:, None]
    dn = np.stack([du[:, 1], -du[:, 0]], axis=1)
    dc = 0.5 * (da + db)
    return dc, dn


def _residual_core(v, w, dts, ranges, angles, src, idx_i, idx_j):
    """Residuals and Jacobians over pre-subset measurement arrays."""
    p, dpv, dpw = beam_endpoints_with_jacobian(v, w, dts, ranges, angles)
    centers, normals, unit, length = _patch_geometry(p, src)
    grads = [
        _patch_geometry_grad(dpv, src, unit, length),
        _patch_geometry_grad(dpw, src, unit, length),
    ]

    ci, cj = centers[idx_i], centers[idx_j]
    ni, nj = normals[idx_i], normals[idx_j]
    cdiff = ci - cj
    nsum = ni + nj
    e = np.empty((idx_i.shape[0], 3))
    e[:, 0] = 0.5 * np.einsum("ij,ij->i", cdiff, nsum)
    e[:, 1:] = nj - ni

    jac = np.empty((idx_i.shape[0], 3, 2))
    for col, (dc, dn) in enumerate(grads):
        dci, dcj = dc[idx_i], dc[idx_j]
        dni, dnj = dn[idx_i], dn[idx_j]
        jac[:, 0, col] = 0.5 * (
            np.einsum("ij,ij->i", dci - dcj, nsum)
            + np.einsum("ij,ij->i", cdiff, dni + dnj)
        )
        jac[:, 1:, col] = dnj - dni
    return e, jac


def residuals_and_jacobian(
    vel: BodyVelocity,
    scan: SweepScan,
    src: np.ndarray,
    idx_i: np.ndarray,
    idx_j: np.ndarray,
):
    """Residuals (n, 3) and Jacobians (n, 3, 2) for all correspondences.

    `src` are the frozen measurement-index pairs backing each patch; patches
    are rebuilt under `vel` so the residual is differentiable in (v, w).
    """
    dts = scan.timestamps - scan.sweep_start
    return _residual_core(
        vel.v, vel.w, dts, scan.ranges, scan.angles,
        np.asarray(src, dtype=int), idx_i, idx_j,
    )


def error_jacobian(
    vel: BodyVelocity, scan: SweepScan, corr: Correspondence, src: np.ndarray
) -> np.ndarray:
    """3x2 Jacobian of one correspondence's error w.r.t. (v, w)."""
    _, jac = residuals_and_jacobian(
        vel, scan, np.asarray(src, dtype=int),
        np.array([corr.i]), np.array([corr.j]),
    )
    return jac[0]


def _apply_residual_weights(e, jac, cfg: SolverConfig):
    if cfg.residual_weights is None:
        return e, jac
    w3 = np.asarray(cfg.residual_weights, dtype=float)
    return e * w3, jac * w3[None, :, None]


def irls_solve(
    scan: SweepScan,
    src: np.ndarray,
    corrs: list[Correspondence],
    x0: BodyVelocity,
    cfg: SolverConfig | None = None,
) -> tuple[BodyVelocity, list[float]]:
    """Minimize the Huber-robustified cost over (v, w) with frozen correspondences.

    Returns the final iterate and the per-iteration cost trace (index 0 is
    the cost at x0).  The trace is non-increasing: steps are backtracked
    and the loop stops once no decrease is possible.
    """
    cfg = cfg or SolverConfig()
    if len(corrs) < 3:
        raise ValueError("need at least 3 correspondences")
    idx_i, idx_j = correspondence_arrays(corrs)
    src = np.asarray(src, dtype=int)

    # Only measurements referenced by a patch enter the solve; subset once.
    uniq, inv = np.unique(src, return_inverse=True)
    src_local = inv.reshape(src.shape)
    dts = (scan.timestamps - scan.sweep_start)[uniq]
    ranges = scan.ranges[uniq]
    angles = scan.angles[uniq]

    def clip_state(x: np.ndarray) -> np.ndarray:
        # Keep iterates inside the velocity sanity box.
        return np.clip(x, [-V_LIMIT, -W_LIMIT], [V_LIMIT, W_LIMIT])

    def weighted_residuals(x: np.ndarray):
        e, jac = _residual_core(
            x[0], x[1], dts, ranges, angles, src_local, idx_i, idx_j
        )
        return _apply_residual_weights(e, jac, cfg)

    x = x0.as_array()
    e, jac = weighted_residuals(x)
    norms = np.linalg.norm(e, axis=1)
    cost = huber_cost(norms, cfg.huber_delta)
    trace = [cost]

    for _ in range(cfg.max_irls_iters):
        w = np.minimum(1.0, cfg.huber_delta / np.maximum(norms, 1e-300))
        jw = jac * w[:, None, None]
        hessian = np.einsum("nik,nil->kl", jw, jac)
        grad = np.einsum("nik,ni->k", jw, e)

        evals = np.linalg.eigvalsh(hessian)
        if evals[1] <= 0 or evals[1] / max(evals[0], 1e-300) > _COND_LIMIT:
            raise DegenerateGeometryError(
                "normal matrix is rank deficient; geometry does not constrain "
                "both velocity components"
            )
        step = np.linalg.solve(hessian + cfg.damping * np.eye(2), -grad)

        # Backtrack on the true robust cost so the trace is monotone.
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            x_new = clip_state(x + step)
            e_new, jac_new = weighted_residuals(x_new)
            norms_new = np.linalg.norm(e_new, axis=1)
            cost_new = huber_cost(norms_new, cfg.huber_delta)
            if cost_new <= cost:
                accepted = True
                break
            step = 0.5 * step
        if not accepted:
            break
        applied = np.linalg.norm(x_new - x)
        x, e, jac, norms, cost = x_new, e_new, jac_new, norms_new, cost_new
        trace.append(cost)
        if applied < cfg.convergence_tol:
            break
    return BodyVelocity(x[0], x[1]), trace


def estimate_velocity(
    scan: SweepScan,
    x0: BodyVelocity | None = None,
    cfg: EstimatorConfig | None = None,
) -> EstimateReport:
    """Estimate (v, w) by ICP-style self-registration of one sweep window.

    Each round: de-skew under the current estimate, regularize, build
    patches, associate, then refine by IRLS.  Terminates when the round
    update falls below the solver's convergence tolerance.
    """
    cfg = cfg or EstimatorConfig()
    if len(scan) < 2:
        raise EstimationFailedError("scan too short to estimate velocity")
    x = x0 or BodyVelocity(0.0, 0.0)

    cost_trace: list[list[float]] = []
    round_velocities: list[BodyVelocity] = []
    n_corrs = 0
    final_cost = math.nan
    mean_abs_proj = math.nan

    dts = scan.timestamps - scan.sweep_start
    rounds = 0
    for rounds in range(1, cfg.solver.max_icp_rounds + 1):
        endpoints = beam_endpoints(x.v, x.w, dts, scan.ranges, scan.angles)
        retained, breaks = regularize(endpoints, cfg.regularization)
        src = patch_pairs(retained, breaks)
        if src.shape[0] == 0:
            raise EstimationFailedError(
                f"round {rounds}: no patches after regularization"
            )
        patches = build_patches_from_pairs(endpoints, scan.timestamps, src)
        corrs = find_correspondences(patches, cfg.association)
        if len(corrs) < 3:
            raise EstimationFailedError(
                f"round {rounds}: only {len(corrs)} correspondences "
                "(need >= 3); widen the gates or check the scan"
            )
        x_new, trace = irls_solve(scan, src, corrs, x, cfg.solver)
        cost_trace.append(trace)
        round_velocities.append(x_new)
        n_corrs = len(corrs)
        final_cost = trace[-1]

        delta = np.linalg.norm(x_new.as_array() - x.as_array())
        x = x_new
        if delta < cfg.solver.convergence_tol:
            break

    idx_i, idx_j = correspondence_arrays(corrs)
    e, _ = residuals_and_jacobian(x, scan, src, idx_i, idx_j)
    mean_abs_proj = float(np.mean(np.abs(e[:, 0])))

    return EstimateReport(
        velocity=x,
        rounds=rounds,
        final_cost=final_cost,
        correspondence_count=n_corrs,
        cost_trace=cost_trace,
        round_velocities=round_velocities,
        mean_abs_projective_residual=mean_abs_proj,
    )
