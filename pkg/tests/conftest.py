import numpy as np
import pytest

from hydrosim import kernels
from hydrosim.config import data_path, load_scenario_config, load_vehicle_config, load_water_config


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger numba compilation once so timed tests measure the algorithm."""
    from hydrosim.dynamics import DynamicsParams, HydroParams, RigidBodyParams, VehicleState, step

    rb = RigidBodyParams(mass=1.0, inertia=np.eye(3), weight=9.8, buoyancy=9.8)
    params = DynamicsParams(rb, HydroParams())
    step(VehicleState(), params, np.zeros(6))


@pytest.fixture(scope="session")
def bluerov():
    return load_vehicle_config(data_path("bluerov2_heavy.json"))


@pytest.fixture(scope="session")
def pipe_scenario():
    return load_scenario_config(data_path("pipe20.json"))


@pytest.fixture(scope="session")
def ocean():
    return load_water_config(data_path("ocean_water.json"))
