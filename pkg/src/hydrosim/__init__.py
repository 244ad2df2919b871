"""hydrosim: deterministic underwater vehicle simulator and benchmark kit.

Headless 6-DOF ROV dynamics (fixed-step velocity Verlet at 1 kHz), MPC +
pseudo-inverse thruster allocation, an analytic underwater camera, a
pipe-inspection episode environment with a newline-delimited JSON wire
protocol, and Sim3-aligned APE/RPE trajectory benchmarking.
"""

__version__ = "0.1.0"

from .dynamics import (  # noqa: F401
    DisturbanceModel,
    DivergenceError,
    DynamicsParams,
    HydroParams,
    RigidBodyParams,
    VehicleState,
    acceleration,
    step,
)
from .geom import Sim3  # noqa: F401
from .kernels import USING_NUMBA  # noqa: F401
from .sim import Simulation  # noqa: F401
