"""
Kinematic bicycle model integration.
"""

import math

from ..errors import NonFiniteStateError, SimulationError
from .models import ControlInput, VehicleParams, VehicleState

EULER_SUBSTEP = 0.01


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def step_bicycle(
    state: VehicleState,
    control: ControlInput,
    params: VehicleParams,
    dt: float,
    substep: float = EULER_SUBSTEP,
) -> VehicleState:
    """
    Advance the kinematic bicycle model by ``dt`` seconds.

    Integrates x' = v cos psi, y' = v sin psi, psi' = v tan(delta) / L and
    v' = alpha (v_ref - v) with explicit Euler, splitting ``dt`` into equal
    sub-steps no longer than ``substep``. Speed is floored at zero.

    Args:
        state: Current state
        control: Reference speed and steering angle, clamped to the vehicle limits
        params: Vehicle parameters
        dt: Step length in seconds

    Returns:
        New state with heading wrapped to (-pi, pi]
    """
    if dt <= 0:
        raise SimulationError(f"dt must be positive, got {dt}")
    if not state.is_finite() or not (math.isfinite(control.v_ref) and math.isfinite(control.delta)):
        raise NonFiniteStateError(f"Non-finite state or input: {state}, {control}")

    v_ref = min(max(control.v_ref, 0.0), params.v_max)
    delta = min(max(control.delta, -params.delta_max), params.delta_max)
    yaw_gain = math.tan(delta) / params.wheelbase

    n = max(1, int(round(dt / substep)))
    h = dt / n
    x, y, psi, v = state.x, state.y, state.psi, state.v
    for _ in range(n):
        x, y, psi, v = (
            x + h * v * math.cos(psi),
            y + h * v * math.sin(psi),
            psi + h * v * yaw_gain,
            max(0.0, v + h * params.alpha * (v_ref - v)),
        )
    return VehicleState(x=x, y=y, psi=wrap_angle(psi), v=v)
