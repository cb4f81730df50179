"""Command-line surface: simulate, estimate, deskew, eval, grid, render.

Exit codes: 0 success, 1 usage or file-format problems, 2 domain failures
(degenerate geometry, estimation failure, robot leaving the world).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .association import AssociationConfig
from .errors import (
    AlignmentError,
    DegenerateGeometryError,
    EstimationFailedError,
    ScanFormatError,
    SimulationDomainError,
)
from .evaluation import (
    ate,
    grid_table_csv,
    grid_table_text,
    point_rmse,
    run_velocity_grid,
)
from .fileio import (
    read_points,
    read_scan,
    read_trajectory,
    write_json,
    write_manifest,
    write_points,
    write_scan,
)
from .motion_model import BodyVelocity, deskew_scan
from .render import render_point_sets
from .scan_pipeline import RegularizationConfig
from .simulator import SensorConfig, WorldModel, default_room, simulate_sweep
from .solver import EstimatorConfig, SolverConfig, estimate_velocity

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(
        regularization=RegularizationConfig(
            min_gap=args.min_gap, max_gap=args.max_gap
        ),
        association=AssociationConfig(
            tau_c=args.tau_c, tau_n=args.tau_n, tau_t=args.tau_t
        ),
        solver=SolverConfig(
            huber_delta=args.huber_delta,
            max_icp_rounds=args.max_rounds,
        ),
    )


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-gap", type=float, default=0.15)
    p.add_argument("--max-gap", type=float, default=0.4)
    p.add_argument("--tau-c", type=float, default=0.5)
    p.add_argument("--tau-n", type=float, default=0.9)
    p.add_argument("--tau-t", type=float, default=0.05)
    p.add_argument("--huber-delta", type=float, default=0.1)
    p.add_argument("--max-rounds", type=int, default=20)


def _load_world(path: str | None) -> WorldModel:
    return WorldModel.load(path) if path else default_room()


def _estimator_params(args) -> dict:
    return {
        "min_gap": args.min_gap, "max_gap": args.max_gap,
        "tau_c": args.tau_c, "tau_n": args.tau_n, "tau_t": args.tau_t,
        "huber_delta": args.huber_delta, "max_rounds": args.max_rounds,
    }


def cmd_simulate(args) -> int:
    world = _load_world(args.world)
    sensor = SensorConfig(
        sweep_hz=args.sweep_hz,
        beams_per_rev=args.beams,
        range_noise_sigma=args.noise_sigma,
    )
    bundle = simulate_sweep(
        world, BodyVelocity(args.v, args.w), sensor, args.revs, args.seed
    )
    out = Path(args.out)
    scan_path = out.with_name(out.name + "_scan.csv")
    points_path = out.with_name(out.name + "_true_points.csv")
    manifest_path = out.with_name(out.name + "_manifest.json")
    write_scan(scan_path, bundle.scan)
    write_points(points_path, bundle.true_endpoints)
    write_manifest(
        manifest_path, "simulate",
        {
            "v": args.v, "w": args.w, "revs": args.revs, "seed": args.seed,
            "sweep_hz": args.sweep_hz, "beams": args.beams,
            "noise_sigma": args.noise_sigma, "world": args.world,
        },
        inputs=[args.world] if args.world else [],
        outputs=[str(scan_path), str(points_path)],
        version=__version__,
    )
    print(f"wrote {scan_path} ({len(bundle.scan)} beams)")
    return EXIT_OK


def _run_estimate(args):
    scan = read_scan(args.scan)
    report = estimate_velocity(scan, cfg=_estimator_config(args))
    return scan, report


def _report_doc(report) -> dict:
    return {
        "v": report.velocity.v,
        "w": report.velocity.w,
        "rounds": report.rounds,
        "final_cost": report.final_cost,
        "correspondence_count": report.correspondence_count,
        "mean_abs_projective_residual": report.mean_abs_projective_residual,
        "cost_trace": report.cost_trace,
    }


def cmd_estimate(args) -> int:
    _, report = _run_estimate(args)
    print(f"v={report.velocity.v:.6f} w={report.velocity.w:.6f}")
    if args.report:
        write_json(args.report, _report_doc(report))
        write_manifest(
            Path(args.report).with_suffix(".manifest.json"), "estimate",
            _estimator_params(args) | {"scan": args.scan},
            inputs=[args.scan], outputs=[args.report], version=__version__,
        )
    return EXIT_OK


def cmd_deskew(args) -> int:
    if args.auto:
        scan, report = _run_estimate(args)
        vel = report.velocity
        estimated = _report_doc(report)
    else:
        if args.v is None or args.w is None:
            raise _UsageError("provide --v and --w, or --auto")
        scan = read_scan(args.scan)
        vel = BodyVelocity(args.v, args.w)
        estimated = None
    points = deskew_scan(scan, vel)
    write_points(args.out, points)
    params = _estimator_params(args) | {
        "scan": args.scan, "auto": args.auto, "v": vel.v, "w": vel.w,
    }
    if estimated is not None:
        params["estimate"] = estimated
    write_manifest(
        Path(args.out).with_suffix(".manifest.json"), "deskew", params,
        inputs=[args.scan], outputs=[args.out], version=__version__,
    )
    print(f"wrote {args.out} (v={vel.v:.6f} w={vel.w:.6f})")
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.points_a and args.points_b:
        metrics = {
            "rmse": point_rmse(read_points(args.points_a), read_points(args.points_b))
        }
    elif args.traj_est and args.traj_ref:
        metrics = {
            "ate": ate(
                read_trajectory(args.traj_est),
                read_trajectory(args.traj_ref),
                max_dt=args.max_dt,
            )
        }
    else:
        raise _UsageError(
            "provide --points-a/--points-b or --traj-est/--traj-ref"
        )
    for k, v in metrics.items():
        print(f"{k}={v:.6f}")
    if args.out:
        write_json(args.out, metrics)
    return EXIT_OK


def _parse_float_set(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"bad numeric list: {text!r}") from None


def cmd_grid(args) -> int:
    world = _load_world(args.world)
    v_set = _parse_float_set(args.v_set)
    w_set = _parse_float_set(args.w_set)
    t0 = time.perf_counter()
    results = run_velocity_grid(
        v_set, w_set, trials=args.trials, world=world, base_seed=args.seed
    )
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    csv_path = out.with_name(out.name + "_grid.csv")
    txt_path = out.with_name(out.name + "_grid.txt")
    csv_path.write_text(grid_table_csv(results))
    txt_path.write_text(grid_table_text(results))
    write_manifest(
        out.with_name(out.name + "_manifest.json"), "grid",
        {
            "v_set": v_set, "w_set": w_set, "trials": args.trials,
            "seed": args.seed, "world": args.world,
        },
        inputs=[args.world] if args.world else [],
        outputs=[str(csv_path), str(txt_path)],
        version=__version__,
    )
    n_cells = len(results)
    n_failed = sum(r.failed for r in results)
    print(grid_table_text(results))
    print(f"{n_cells} cells, {n_failed} failed, "
          f"{elapsed / n_cells:.2f} s/cell")
    return EXIT_OK if n_failed * 10 <= n_cells else EXIT_DOMAIN


def cmd_render(args) -> int:
    sets = [read_points(p) for p in args.points]
    labels = args.labels.split(",") if args.labels else [
        Path(p).stem for p in args.points
    ]
    if len(labels) != len(sets):
        raise _UsageError("number of labels must match number of point files")
    render_point_sets(sets, labels, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="lidar-deskew", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic skewed sweep")
    p.add_argument("--world", help="world JSON (default: built-in room)")
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--w", type=float, required=True)
    p.add_argument("--revs", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep-hz", type=float, default=10.0)
    p.add_argument("--beams", type=int, default=360)
    p.add_argument("--noise-sigma", type=float, default=0.01)
    p.add_argument("--out", required=True, help="output file prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate (v, w) from a scan stream")
    p.add_argument("--scan", required=True)
    p.add_argument("--report", help="write EstimateReport JSON here")
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("deskew", help="de-skew a scan to the sweep-start frame")
    p.add_argument("--scan", required=True)
    p.add_argument("--v", type=float)
    p.add_argument("--w", type=float)
    p.add_argument("--auto", action="store_true",
                   help="estimate the velocity first")
    p.add_argument("--out", required=True)
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_deskew)

    p = sub.add_parser("eval", help="point RMSE or trajectory ATE")
    p.add_argument("--points-a")
    p.add_argument("--points-b")
    p.add_argument("--traj-est")
    p.add_argument("--traj-ref")
    p.add_argument("--max-dt", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="velocity-grid experiment")
    p.add_argument("--world")
    p.add_argument("--v-set", default="-2,-1,-0.5,0.5,1,2")
    p.add_argument("--w-set", default="-2,-1,-0.5,0.5,1,2")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file prefix")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("render", help="overlay point sets as an SVG")
    p.add_argument("points", nargs="+", help="points CSV files (up to 4)")
    p.add_argument("--labels", help="comma-separated legend labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScanFormatError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimationFailedError, DegenerateGeometryError,
            SimulationDomainError, AlignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
