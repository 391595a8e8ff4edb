"""
Domain exceptions shared across the simulator packages.
"""

from typing import Optional


class SimulationError(ValueError):
    """Base class for invalid inputs and violated model invariants."""


class MapLoadError(SimulationError):
    """Raised when a map file cannot be parsed or violates a graph invariant."""

    def __init__(self, message: str, element_id: Optional[object] = None) -> None:
        self.element_id = element_id
        if element_id is not None:
            message = f"{message} (element {element_id})"
        super().__init__(message)


class NoPathError(SimulationError):
    """Raised when a routing goal is unreachable from the start node."""


class ArclengthOutOfRangeError(SimulationError):
    """Raised when an arclength query falls outside a path."""


class NonFiniteStateError(SimulationError):
    """Raised when a vehicle state contains NaN or infinite values."""


class RateLimitError(SimulationError):
    """Raised when a sender publishes faster than the bus cadence allows."""


class DegenerateBoxError(SimulationError):
    """Raised when corner points do not describe a usable rectangle."""


class LogFormatError(SimulationError):
    """Raised when a detection log line cannot be parsed."""

    def __init__(self, message: str, line_number: int) -> None:
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class HorizonMismatchError(SimulationError):
    """Raised when two occupied regions do not cover the same number of steps."""


class ScenarioError(SimulationError):
    """Raised when a scenario file is malformed or violates its invariants."""
