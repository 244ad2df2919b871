"""Cross-checks between the numba-compiled kernels and the pure-numpy
fallback selected by HYDROSIM_NUMBA=0."""
import json
import os
import subprocess
import sys

import numpy as np

from hydrosim import kernels

_TRAJ_SCRIPT = """
import json
import numpy as np
from hydrosim import kernels
from hydrosim.config import data_path, load_vehicle_config
from hydrosim.sim import Simulation
from hydrosim.dynamics import VehicleState

vehicle = load_vehicle_config(data_path("bluerov2_heavy.json"))
sim = Simulation(dynamics=vehicle.dynamics, thrusters=vehicle.thrusters,
                 water=vehicle.water, dt=vehicle.physics_dt)
sim.reset(VehicleState(np.zeros(6), np.zeros(6), 0.0))
u = np.array([0.4, 0.4, -0.4, -0.4, 0.2, 0.2, 0.2, 0.2])
for _ in range(10):
    sim.advance_thrusters(u, 50)
print(json.dumps({"numba": kernels.USING_NUMBA,
                  "eta": list(sim.state.eta), "nu": list(sim.state.nu)}))
"""


def _run_with_flag(flag: str):
    env = dict(os.environ, HYDROSIM_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", _TRAJ_SCRIPT], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_env_flag_selects_backend():
    assert _run_with_flag("0")["numba"] is False
    assert _run_with_flag("1")["numba"] is True


def test_numpy_fallback_matches_numba_path():
    a = _run_with_flag("0")
    b = _run_with_flag("1")
    assert np.allclose(a["eta"], b["eta"], rtol=0, atol=1e-12)
    assert np.allclose(a["nu"], b["nu"], rtol=0, atol=1e-12)


def test_single_path_determinism():
    a = _run_with_flag("auto")
    b = _run_with_flag("auto")
    assert a == b  # bit-identical JSON including float repr


def test_wrap_pi_scalar():
    assert kernels._wrap_pi(0.25) == 0.25
    assert kernels._wrap_pi(np.pi) == np.pi
    assert abs(kernels._wrap_pi(3 * np.pi) - np.pi) < 1e-12
    assert abs(kernels._wrap_pi(-3.5 * np.pi) - 0.5 * np.pi) < 1e-12
