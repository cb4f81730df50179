"""CSV/JSON file formats for scans, points, trajectories, and manifests.

Timestamps are written with 9 fractional digits so per-beam ordering
survives a round trip even at high beam rates.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ScanFormatError
from .motion_model import SweepScan, Trajectory

SCAN_HEADER = "t,angle,range"
POINTS_HEADER = "x,y"
TRAJECTORY_HEADER = "t,x,y,theta"
MANIFEST_SCHEMA_VERSION = 1


def _parse_floats(line: str, n: int, lineno: int) -> list[float]:
    parts = line.split(",")
    if len(parts) != n:
        raise ScanFormatError(f"expected {n} comma-separated fields", lineno)
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ScanFormatError(f"non-numeric field in {line!r}", lineno) from None


def _read_table(path: str | Path, header: str, ncols: int) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != header:
        raise ScanFormatError(f"missing header {header!r}", 1)
    rows = [
        _parse_floats(line.strip(), ncols, k)
        for k, line in enumerate(lines[1:], start=2)
        if line.strip()
    ]
    return np.array(rows, dtype=float).reshape(-1, ncols)


def write_scan(path: str | Path, scan: SweepScan) -> None:
    lines = [SCAN_HEADER]
    for t, a, r in zip(scan.timestamps, scan.angles, scan.ranges):
        lines.append(f"{t:.9f},{a:.9f},{r:.9f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_scan(path: str | Path) -> SweepScan:
    rows = _read_table(path, SCAN_HEADER, 3)
    if rows.shape[0] == 0:
        raise ScanFormatError("scan file contains no measurements")
    return SweepScan(rows[:, 0], rows[:, 1], rows[:, 2], sweep_start=rows[0, 0])


def write_points(path: str | Path, points: np.ndarray) -> None:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    lines = [POINTS_HEADER] + [f"{x:.9f},{y:.9f}" for x, y in points]
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path: str | Path) -> np.ndarray:
    return _read_table(path, POINTS_HEADER, 2)


def write_trajectory(path: str | Path, traj: Trajectory) -> None:
    lines = [TRAJECTORY_HEADER]
    for t, (x, y, th) in zip(traj.timestamps, traj.poses):
        lines.append(f"{t:.9f},{x:.9f},{y:.9f},{th:.9f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path: str | Path) -> Trajectory:
    rows = _read_table(path, TRAJECTORY_HEADER, 4)
    return Trajectory(rows[:, 0], rows[:, 1:])


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_manifest(path: str | Path, command: str, parameters: dict,
                   inputs: list[str], outputs: list[str], version: str) -> None:
    """Record everything needed to reproduce a CLI run byte-exactly."""
    write_json(path, {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": "lidar-deskew",
        "tool_version": version,
        "command": command,
        "parameters": parameters,
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
    })
