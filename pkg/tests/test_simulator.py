import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lidar_deskew import BodyVelocity, WorldModel, default_room, simulate_sweep
from lidar_deskew.errors import ScanFormatError, SimulationDomainError
from lidar_deskew.motion_model import Pose2
from lidar_deskew.simulator import (
    SensorConfig,
    raycast,
    raycast_many,
)


def _square(half=1.0):
    c = [[-half, -half], [half, -half], [half, half], [-half, half]]
    return WorldModel(np.array([[c[k], c[(k + 1) % 4]] for k in range(4)]))


# --- ray casting ---------------------------------------------------------


def test_raycast_axis_aligned_hits():
    world = _square(2.0)
    assert raycast(world, (0.0, 0.0), 0.0) == pytest.approx(2.0)
    assert raycast(world, (0.0, 0.0), math.pi / 2) == pytest.approx(2.0)
    assert raycast(world, (1.0, 0.0), math.pi) == pytest.approx(3.0)


def test_raycast_diagonal_hits_corner_distance():
    world = _square(1.0)
    r = raycast(world, (0.0, 0.0), math.pi / 4)
    assert r == pytest.approx(math.sqrt(2.0))


def test_raycast_miss_returns_none():
    # Single wall behind the ray.
    world = WorldModel(np.array([[[-1.0, -5.0], [-1.0, 5.0]]]))
    assert raycast(world, (0.0, 0.0), 0.0) is None


def test_raycast_respects_max_range():
    world = _square(2.0)
    assert raycast(world, (0.0, 0.0), 0.0, max_range=1.5) is None


def test_raycast_picks_nearest_of_several_segments():
    world = WorldModel(
        np.array([[[3.0, -1.0], [3.0, 1.0]], [[1.0, -1.0], [1.0, 1.0]]])
    )
    assert raycast(world, (0.0, 0.0), 0.0) == pytest.approx(1.0)


def test_raycast_rejects_non_finite_direction():
    with pytest.raises(ValueError):
        raycast(_square(), (0.0, 0.0), math.nan)


def test_raycast_many_matches_scalar_raycast():
    world = default_room()
    rng = np.random.default_rng(7)
    origins = rng.uniform(-1.0, 1.0, size=(50, 2))
    dirs = rng.uniform(-math.pi, math.pi, size=50)
    many = raycast_many(world, origins, dirs, 30.0)
    for k in range(50):
        one = raycast(world, origins[k], dirs[k])
        if one is None:
            assert math.isnan(many[k])
        else:
            assert many[k] == pytest.approx(one)


@settings(max_examples=50, deadline=None)
@given(
    x=st.floats(-1.5, 1.5),
    y=st.floats(-1.5, 1.5),
    direction=st.floats(-math.pi, math.pi),
)
def test_raycast_endpoint_lies_on_square_boundary(x, y, direction):
    world = _square(2.0)
    r = raycast(world, (x, y), direction)
    assert r is not None
    hit = np.array([x + r * math.cos(direction), y + r * math.sin(direction)])
    assert np.max(np.abs(hit)) == pytest.approx(2.0, abs=1e-9)


# --- world model ---------------------------------------------------------


def test_world_model_json_round_trip(tmp_path):
    world = default_room()
    path = tmp_path / "w.json"
    world.save(path)
    again = WorldModel.load(path)
    np.testing.assert_allclose(again.segments, world.segments)


def test_world_model_rejects_bad_json():
    with pytest.raises(ScanFormatError):
        WorldModel.from_json("{nope")
    with pytest.raises(ScanFormatError):
        WorldModel.from_json(json.dumps({"version": 99, "segments": []}))
    with pytest.raises(ScanFormatError):
        WorldModel.from_json(json.dumps([1, 2, 3]))


def test_world_model_rejects_degenerate_segment():
    with pytest.raises(ValueError):
        WorldModel(np.array([[[1.0, 1.0], [1.0, 1.0]]]))


def test_repo_world_file_matches_default_room():
    shipped = WorldModel.load("worlds/room.json")
    np.testing.assert_allclose(shipped.segments, default_room().segments)


# --- sweep simulation ----------------------------------------------------


def test_simulate_sweep_static_noiseless_matches_raycast(room, noiseless_sensor):
    bundle = simulate_sweep(room, BodyVelocity(0.0, 0.0), noiseless_sensor,
                            n_revs=1, seed=0)
    scan = bundle.scan
    for k in range(0, len(scan.timestamps), 37):
        expected = raycast(room, (0.0, 0.0), float(scan.angles[k]))
        assert scan.ranges[k] == pytest.approx(expected)


def test_simulate_sweep_timing_and_angles(room):
    sensor = SensorConfig(sweep_hz=5.0, beams_per_rev=90, range_noise_sigma=0.0)
    bundle = simulate_sweep(room, BodyVelocity(0.0, 0.0), sensor, n_revs=2)
    scan = bundle.scan
    dt = np.diff(scan.timestamps)
    assert np.allclose(dt, 1.0 / (90 * 5.0))
    assert np.all(scan.angles >= -math.pi) and np.all(scan.angles < math.pi)
    assert scan.angles[0] == pytest.approx(0.0)


def test_simulate_sweep_is_seed_deterministic(room):
    a = simulate_sweep(room, BodyVelocity(0.4, -0.3), seed=42)
    b = simulate_sweep(room, BodyVelocity(0.4, -0.3), seed=42)
    np.testing.assert_array_equal(a.scan.ranges, b.scan.ranges)
    c = simulate_sweep(room, BodyVelocity(0.4, -0.3), seed=43)
    assert not np.array_equal(a.scan.ranges, c.scan.ranges)


def test_simulate_sweep_noise_statistics(room):
    sigma = 0.05
    sensor = SensorConfig(range_noise_sigma=sigma)
    clean = simulate_sweep(room, BodyVelocity(0.0, 0.0),
                           SensorConfig(range_noise_sigma=0.0), n_revs=4)
    noisy = simulate_sweep(room, BodyVelocity(0.0, 0.0), sensor, n_revs=4, seed=5)
    resid = noisy.scan.ranges - clean.scan.ranges
    assert abs(resid.mean()) < 3 * sigma / math.sqrt(len(resid))
    assert resid.std() == pytest.approx(sigma, rel=0.1)


def test_simulate_sweep_moving_skews_endpoints(room, noiseless_sensor):
    vel = BodyVelocity(1.0, 0.8)
    bundle = simulate_sweep(room, vel, noiseless_sensor, seed=0)
    scan = bundle.scan
    naive = np.stack(
        [scan.ranges * np.cos(scan.angles), scan.ranges * np.sin(scan.angles)],
        axis=1,
    )
    gap = np.linalg.norm(naive - bundle.true_endpoints, axis=1)
    assert gap.max() > 0.1  # late beams are visibly displaced
    assert gap[0] == pytest.approx(0.0, abs=1e-12)  # first beam fires at t=0


def test_simulate_sweep_ground_truth_poses(room, noiseless_sensor):
    vel = BodyVelocity(0.7, -0.4)
    bundle = simulate_sweep(room, vel, noiseless_sensor, seed=0)
    poses = bundle.true_poses
    # Arc-length consistency: speed along the trajectory equals |v|.
    ds = np.linalg.norm(np.diff(poses.positions, axis=0), axis=1)
    dt = np.diff(poses.timestamps)
    np.testing.assert_allclose(ds / dt, abs(vel.v), rtol=1e-6)


def test_simulate_sweep_start_pose_changes_world_not_scan(room):
    vel = BodyVelocity(0.3, 0.2)
    base = simulate_sweep(room, vel, seed=9)
    # Pure rotation of the start pose inside a rotationally asymmetric room
    # changes what the sensor sees, but a tiny translation in an open area
    # leaves the scan geometry only slightly perturbed; here we just check
    # the offset run still works and stays in bounds.
    shifted = simulate_sweep(room, vel, seed=9, start_pose=Pose2(0.5, -0.5, 1.0))
    assert len(shifted.scan.timestamps) > 0
    assert base.scan.ranges.shape == base.true_endpoints.shape[:1]


def test_simulate_sweep_out_of_bounds_raises(room):
    with pytest.raises(SimulationDomainError):
        simulate_sweep(room, BodyVelocity(8.0, 0.0), n_revs=2,
                       start_pose=Pose2(4.0, 0.0, 0.0))


def test_simulate_sweep_drops_missed_beams():
    # One short wall: most beams miss and must be absent from the scan.
    world = WorldModel(np.array([[[2.0, -0.5], [2.0, 0.5]],
                                 [[-9.0, -9.0], [-9.0, 9.0]],
                                 [[-9.0, 9.0], [9.0, 9.0]],
                                 [[9.0, 9.0], [9.0, -9.0]],
                                 [[9.0, -9.0], [-9.0, -9.0]]]))
    sensor = SensorConfig(range_noise_sigma=0.0, max_range=5.0)
    bundle = simulate_sweep(world, BodyVelocity(0.0, 0.0), sensor, n_revs=1)
    assert 0 < len(bundle.scan.timestamps) < 360
    assert np.all(bundle.scan.ranges <= 5.0)


def test_sensor_config_validation():
    with pytest.raises(ValueError):
        SensorConfig(sweep_hz=0.0)
    with pytest.raises(ValueError):
        SensorConfig(beams_per_rev=4)
    with pytest.raises(ValueError):
        SensorConfig(range_noise_sigma=-0.1)
