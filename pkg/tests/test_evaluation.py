import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lidar_deskew import ate, horn_align, run_velocity_grid
from lidar_deskew.errors import AlignmentError
from lidar_deskew.evaluation import (
    GRID_CSV_HEADER,
    GridCellResult,
    grid_table_csv,
    grid_table_text,
    point_rmse,
)
from lidar_deskew.motion_model import Pose2, Trajectory
from lidar_deskew.simulator import SensorConfig


def _trajectory(n=50, seed=0, t0=0.0):
    rng = np.random.default_rng(seed)
    t = t0 + np.arange(n) * 0.1
    pos = np.cumsum(rng.normal(0.0, 0.2, size=(n, 2)), axis=0)
    theta = rng.uniform(-math.pi, math.pi, size=n)
    return Trajectory(t, np.column_stack([pos, theta]))


def _transform_trajectory(traj, pose):
    moved = pose.transform(traj.positions)
    theta = traj.poses[:, 2] + pose.theta
    return Trajectory(traj.timestamps, np.column_stack([moved, theta]))


# --- point RMSE ----------------------------------------------------------


def test_point_rmse_zero_for_identical_clouds():
    pts = np.random.default_rng(1).normal(size=(30, 2))
    assert point_rmse(pts, pts) == 0.0


def test_point_rmse_constant_offset():
    pts = np.zeros((10, 2))
    assert point_rmse(pts, pts + [3.0, 4.0]) == pytest.approx(5.0)


def test_point_rmse_shape_mismatch():
    with pytest.raises(ValueError):
        point_rmse(np.zeros((3, 2)), np.zeros((4, 2)))


# --- Horn alignment and ATE ---------------------------------------------


@settings(max_examples=30, deadline=None)
@given(
    tx=st.floats(-5.0, 5.0),
    ty=st.floats(-5.0, 5.0),
    angle=st.floats(-3.0, 3.0),
)
def test_horn_align_recovers_exact_rigid_transform(tx, ty, angle):
    ref = _trajectory(seed=3)
    pose = Pose2(tx, ty, angle)
    est = _transform_trajectory(ref, pose.inverse())
    recovered = horn_align(est, ref)
    assert recovered.x == pytest.approx(pose.x, abs=1e-9)
    assert recovered.y == pytest.approx(pose.y, abs=1e-9)
    assert recovered.theta == pytest.approx(pose.theta, abs=1e-9)


def test_ate_zero_for_rigidly_displaced_trajectory():
    ref = _trajectory(seed=4)
    est = _transform_trajectory(ref, Pose2(1.0, -2.0, 0.7))
    assert ate(est, ref) < 1e-12


def test_ate_reflects_added_noise():
    ref = _trajectory(n=400, seed=5)
    rng = np.random.default_rng(6)
    noisy = Trajectory(
        ref.timestamps,
        ref.poses + np.column_stack([rng.normal(0, 0.1, (400, 2)), np.zeros(400)]),
    )
    err = ate(noisy, ref)
    # RMSE of 2D Gaussian scatter with per-axis sigma=0.1 is ~0.141.
    assert 0.1 < err < 0.2


def test_ate_associates_by_nearest_time():
    ref = _trajectory(n=50, seed=7)
    # Same path sampled with a small time offset still associates fully.
    est = Trajectory(ref.timestamps + 0.01, ref.poses)
    assert ate(est, ref) < 1e-12


def test_horn_align_requires_overlap():
    ref = _trajectory(n=20, seed=8, t0=0.0)
    est = _trajectory(n=20, seed=9, t0=1000.0)
    with pytest.raises(AlignmentError):
        horn_align(est, ref)


# --- velocity grid -------------------------------------------------------


def test_run_velocity_grid_shapes_and_determinism(room):
    sensor = SensorConfig()
    kwargs = dict(trials=3, world=room, sensor=sensor, base_seed=2)
    a = run_velocity_grid([0.5, 1.0], [0.0, 0.5], **kwargs)
    b = run_velocity_grid([0.5, 1.0], [0.0, 0.5], **kwargs)
    assert len(a) == 4
    assert [r.__dict__ for r in a] == [r.__dict__ for r in b]
    for r in a:
        assert not r.failed
        assert abs(r.v_mean - r.v_cmd) < 0.15
        assert abs(r.w_mean - r.w_cmd) < 0.15
        assert r.rmse_deskewed <= r.rmse_skewed or r.v_cmd == r.w_cmd == 0.0


def test_run_velocity_grid_validates_arguments(room):
    with pytest.raises(ValueError):
        run_velocity_grid([], [0.0])
    with pytest.raises(ValueError):
        run_velocity_grid([0.5], [0.0], trials=1)


def test_grid_cell_failed_majority_rule():
    base = dict(v_cmd=0.0, w_cmd=0.0, v_mean=0.0, v_std=0.0, w_mean=0.0,
                w_std=0.0, rmse_deskewed=0.0, rmse_skewed=0.0)
    assert GridCellResult(**base, trials=4, failures=3).failed
    assert not GridCellResult(**base, trials=4, failures=2).failed


def _fake_results():
    out = []
    for i, (v, w) in enumerate([(0.5, 0.0), (1.0, 0.0), (0.5, 0.5), (1.0, 0.5)]):
        out.append(GridCellResult(v, w, v + 0.01, 0.02, w - 0.01, 0.03,
                                  0.05, 0.3, trials=5, failures=i % 2))
    return out


def test_grid_table_csv_format():
    text = grid_table_csv(_fake_results())
    lines = text.strip().split("\n")
    assert lines[0] == GRID_CSV_HEADER
    assert len(lines) == 5
    assert lines[1].startswith("0.500,0.000,")
    assert all(len(line.split(",")) == 9 for line in lines[1:])


def test_grid_table_text_layout():
    text = grid_table_text(_fake_results())
    assert "w \\ v" in text
    assert "0.510+-0.020" in text
    assert "0.050/0.300" in text


def test_grid_table_text_marks_failed_cells():
    cell = GridCellResult(0.5, 0.0, math.nan, math.nan, math.nan, math.nan,
                          math.nan, math.nan, trials=4, failures=4)
    text = grid_table_text([cell])
    assert "failed" in text
