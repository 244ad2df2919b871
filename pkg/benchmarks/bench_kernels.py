"""Throughput comparison of the physics kernels: numba JIT vs pure numpy.

The hot path is the 1 kHz velocity Verlet loop (3 equation-of-motion
evaluations per step plus the actuator filter). Each backend runs in its
own subprocess so the HYDROSIM_NUMBA import-time switch applies cleanly.

Usage: python benchmarks/bench_kernels.py [--steps 20000]
"""
import argparse
import json
import os
import subprocess
import sys

_WORKER = """
import json, os, time
import numpy as np
from hydrosim import kernels
from hydrosim.config import data_path, load_vehicle_config
from hydrosim.dynamics import VehicleState
from hydrosim.sim import Simulation

steps = int(os.environ["BENCH_STEPS"])
vehicle = load_vehicle_config(data_path("bluerov2_heavy.json"))
sim = Simulation(dynamics=vehicle.dynamics, thrusters=vehicle.thrusters,
                 water=vehicle.water, dt=vehicle.physics_dt)
u = np.array([0.4, 0.4, -0.4, -0.4, 0.2, 0.2, 0.2, 0.2])

# warm-up triggers JIT compilation on the numba path
sim.advance_thrusters(u, 10)
sim.reset(VehicleState())

t0 = time.perf_counter()
sim.advance_thrusters(u, steps)
elapsed = time.perf_counter() - t0
print(json.dumps({"backend": "numba" if kernels.USING_NUMBA else "numpy",
                  "steps": steps, "seconds": elapsed,
                  "steps_per_second": steps / elapsed,
                  "x_final": sim.state.eta[0]}))
"""


def run_backend(flag: str, steps: int) -> dict:
    env = dict(os.environ, HYDROSIM_NUMBA=flag, BENCH_STEPS=str(steps))
    out = subprocess.run([sys.executable, "-c", _WORKER], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20_000,
                        help="physics steps per backend (default 20000 = 20 s simulated)")
    args = parser.parse_args()

    results = [run_backend("1", args.steps), run_backend("0", args.steps)]
    print(f"{'backend':<8} {'steps':>8} {'seconds':>9} {'steps/s':>12} {'sim x [m]':>10}")
    for r in results:
        print(f"{r['backend']:<8} {r['steps']:>8} {r['seconds']:>9.3f} "
              f"{r['steps_per_second']:>12.0f} {r['x_final']:>10.4f}")
    numba, numpy_ = results
    drift = abs(numba["x_final"] - numpy_["x_final"])
    print(f"\nspeedup: {numpy_['seconds'] / numba['seconds']:.1f}x "
          f"(trajectory agreement |dx| = {drift:.2e} m)")


if __name__ == "__main__":
    main()
