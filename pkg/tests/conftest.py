import numpy as np
import pytest

from lidar_deskew import BodyVelocity, default_room, simulate_sweep
from lidar_deskew.simulator import SensorConfig, WorldModel


@pytest.fixture(scope="session")
def room():
    return default_room()


@pytest.fixture(scope="session")
def corridor():
    """Two infinite-looking parallel walls; end walls out of sensor range."""
    return WorldModel(np.array([
        [[-40.0, -1.0], [40.0, -1.0]],
        [[-40.0, 1.0], [40.0, 1.0]],
    ]))


@pytest.fixture(scope="session")
def moving_bundle(room):
    return simulate_sweep(room, BodyVelocity(0.5, 0.5), seed=3)


@pytest.fixture(scope="session")
def static_bundle(room):
    return simulate_sweep(room, BodyVelocity(0.0, 0.0), seed=11)


@pytest.fixture(scope="session")
def noiseless_sensor():
    return SensorConfig(range_noise_sigma=0.0)
