"""
Vehicle state, parameters and control inputs for the kinematic bicycle model.
"""

import math
from dataclasses import dataclass, fields
from typing import Tuple

from ..errors import SimulationError


@dataclass(frozen=True)
class VehicleState:
    """Planar pose and longitudinal speed; psi in (-pi, pi]."""
    x: float
    y: float
    psi: float
    v: float

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x, self.y)

    def is_finite(self) -> bool:
        return all(math.isfinite(getattr(self, f.name)) for f in fields(self))


def _require_positive(obj, *names: str) -> None:
    for name in names:
        value = getattr(obj, name)
        if not value > 0:
            raise SimulationError(f"{type(obj).__name__}.{name} must be positive, got {value}")


@dataclass(frozen=True)
class VehicleParams:
    """Testbed vehicle geometry and actuation limits."""
    wheelbase: float = 0.175
    alpha: float = 4.0
    length: float = 0.30
    width: float = 0.15
    v_max: float = 0.5
    delta_max: float = 0.5

    def __post_init__(self) -> None:
        _require_positive(self, "wheelbase", "alpha", "length", "width", "v_max", "delta_max")

    @property
    def footprint(self) -> Tuple[float, float]:
        return (self.length, self.width)


@dataclass(frozen=True)
class ControlInput:
    v_ref: float
    delta: float


@dataclass(frozen=True)
class IdmParams:
    """Intelligent Driver Model parameters scaled to testbed speeds."""
    desired_speed: float = 0.5
    time_headway: float = 1.0
    min_gap: float = 0.3
    max_accel: float = 0.5
    comfort_decel: float = 0.5
    exponent: float = 4.0

    def __post_init__(self) -> None:
        _require_positive(
            self, "desired_speed", "time_headway", "min_gap", "max_accel", "comfort_decel", "exponent"
        )
