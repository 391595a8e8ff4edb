"""
Thresholds, tracked-HV estimates and the identification memory.
"""

from dataclasses import dataclass
from typing import Tuple

from ..errors import SimulationError
from ..perception.models import Detection
from ..road_map.models import PathRef, Point


@dataclass(frozen=True)
class HvThresholds:
    """Distance thresholds of the identification procedure, in meters."""
    tau_cav: float = 0.135
    tau_fp: float = 0.135
    tau_p: float = 0.20
    grace_period: float = 0.5

    def __post_init__(self) -> None:
        for name in ("tau_cav", "tau_fp", "tau_p"):
            value = getattr(self, name)
            if not value > 0:
                raise SimulationError(f"{name} must be positive, got {value}")
        if self.grace_period < 0:
            raise SimulationError(f"grace_period must be non-negative, got {self.grace_period}")


@dataclass(frozen=True)
class HvEstimate:
    """An identified human-driven vehicle with its route hypotheses."""
    track_id: int
    pose: Tuple[float, float, float]
    candidate_paths: Tuple[PathRef, ...]
    first_seen: float
    last_seen: float

    def __post_init__(self) -> None:
        if self.last_seen < self.first_seen:
            raise SimulationError(
                f"HV {self.track_id}: last_seen {self.last_seen} precedes first_seen {self.first_seen}"
            )

    @property
    def position(self) -> Point:
        return (self.pose[0], self.pose[1])

    @property
    def heading(self) -> float:
        return self.pose[2]

    def to_dict(self) -> dict:
        return {
            "track_id": self.track_id,
            "pose": list(self.pose),
            "candidates": [list(p.segment_ids) for p in self.candidate_paths],
            "first_seen": self.first_seen,
            "last_seen": self.last_seen,
        }


@dataclass(frozen=True)
class HvMemory:
    """
    State carried between identification calls.

    ``estimates`` are the HVs known at the previous call, including ones
    inside their grace window. ``pending`` holds last call's unmatched
    detections near an entry lane; one matching this call admits a new HV.
    """
    estimates: Tuple[HvEstimate, ...] = ()
    pending: Tuple[Detection, ...] = ()
    next_track_id: int = 1

    @property
    def positions(self) -> Tuple[Point, ...]:
        return tuple(e.position for e in self.estimates)

    def is_empty(self) -> bool:
        return not self.estimates and not self.pending
