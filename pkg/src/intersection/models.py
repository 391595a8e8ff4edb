"""
Intersection-management types: configuration, occupied regions, priorities and commands.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import shapely

from ..errors import SimulationError
from ..perception.boxes import box_corners

LADDER_DECIMALS = 9


class ConflictMode(str, Enum):
    TIME_ALIGNED = "time_aligned"
    ANY_TIME = "any_time"


class AgentKind(str, Enum):
    CAV = "cav"
    HV = "hv"


@dataclass(frozen=True)
class ManagerConfig:
    """Priority-based management parameters."""
    v_max: float = 0.5
    dv_step: float = 0.1
    horizon: int = 30
    dt: float = 0.1
    b_safe: float = 0.30
    tick_rate_hz: float = 10.0
    conflict_mode: ConflictMode = ConflictMode.TIME_ALIGNED

    def __post_init__(self) -> None:
        for name in ("v_max", "dv_step", "horizon", "dt", "b_safe", "tick_rate_hz"):
            value = getattr(self, name)
            if not value > 0:
                raise SimulationError(f"ManagerConfig.{name} must be positive, got {value}")
        if self.dv_step > self.v_max:
            raise SimulationError(f"dv_step {self.dv_step} exceeds v_max {self.v_max}")
        object.__setattr__(self, "conflict_mode", ConflictMode(self.conflict_mode))

    @cached_property
    def ladder(self) -> Tuple[float, ...]:
        """Candidate velocities from v_max down to the 0 floor."""
        n = int(math.floor(self.v_max / self.dv_step + 1e-9))
        values = [round(self.v_max - k * self.dv_step, LADDER_DECIMALS) for k in range(n + 1)]
        values = [max(v, 0.0) for v in values]
        if values[-1] > 0.0:
            values.append(0.0)
        return tuple(values)


@dataclass(frozen=True)
class Footprint:
    """Oriented rectangle: center, heading and full side lengths."""
    x: float
    y: float
    psi: float
    length: float
    width: float

    def corners(self) -> np.ndarray:
        return box_corners(self.x, self.y, self.psi, self.length, self.width)

    def polygon(self) -> shapely.Polygon:
        return shapely.Polygon(self.corners())


@dataclass(frozen=True, eq=False)
class OccupiedRegion:
    """
    Predicted occupancy over the horizon.

    ``centers`` has shape (branches, H, 2) and ``headings`` (branches, H); a
    CAV has one branch, an HV one per candidate path. Every rectangle has the
    same (already inflated) length and width.
    """
    centers: np.ndarray
    headings: np.ndarray
    length: float
    width: float
    agent_id: Optional[int] = None
    kind: AgentKind = AgentKind.CAV

    def __post_init__(self) -> None:
        if self.centers.ndim != 3 or self.centers.shape[2] != 2:
            raise SimulationError(f"centers must have shape (branches, H, 2), got {self.centers.shape}")
        if self.headings.shape != self.centers.shape[:2]:
            raise SimulationError("headings must match centers")
        if not (np.isfinite(self.centers).all() and np.isfinite(self.headings).all()):
            raise SimulationError(f"Occupied region of agent {self.agent_id} is not finite")

    @property
    def horizon(self) -> int:
        return int(self.centers.shape[1])

    @property
    def n_branches(self) -> int:
        return int(self.centers.shape[0])

    @property
    def radius(self) -> float:
        """Half-diagonal; rectangles farther apart than two radii cannot touch."""
        return 0.5 * math.hypot(self.length, self.width)

    @cached_property
    def polygons(self) -> np.ndarray:
        """(branches, H) array of rectangles."""
        c, s = np.cos(self.headings), np.sin(self.headings)
        half = np.array([
            [self.length / 2, self.width / 2],
            [-self.length / 2, self.width / 2],
            [-self.length / 2, -self.width / 2],
            [self.length / 2, -self.width / 2],
        ])
        x = self.centers[..., None, 0] + c[..., None] * half[:, 0] - s[..., None] * half[:, 1]
        y = self.centers[..., None, 1] + s[..., None] * half[:, 0] + c[..., None] * half[:, 1]
        return shapely.polygons(np.stack([x, y], axis=-1))

    @property
    def footprints(self) -> List[List[Footprint]]:
        """Per step, the rectangles of every branch."""
        return [
            [
                Footprint(
                    float(self.centers[b, h, 0]),
                    float(self.centers[b, h, 1]),
                    float(self.headings[b, h]),
                    self.length,
                    self.width,
                )
                for b in range(self.n_branches)
            ]
            for h in range(self.horizon)
        ]


@dataclass(frozen=True)
class PriorityEntry:
    agent_id: int
    kind: AgentKind
    entry_time: float


@dataclass(frozen=True)
class PriorityTable:
    """Agents in descending priority: HVs first, then CAVs by entry time."""
    entries: Tuple[PriorityEntry, ...] = ()

    def __post_init__(self) -> None:
        seen_cav = False
        last_cav_time = -math.inf
        for entry in self.entries:
            if entry.kind == AgentKind.CAV:
                if entry.entry_time < last_cav_time:
                    raise SimulationError("CAV entries must be ordered by entry time")
                seen_cav, last_cav_time = True, entry.entry_time
            elif seen_cav:
                raise SimulationError("HV entries must precede every CAV entry")

    def __iter__(self) -> Iterator[PriorityEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def cav_ids(self) -> List[int]:
        return [e.agent_id for e in self.entries if e.kind == AgentKind.CAV]

    @property
    def hv_ids(self) -> List[int]:
        return [e.agent_id for e in self.entries if e.kind == AgentKind.HV]

    def rank(self, agent_id: int, kind: AgentKind = AgentKind.CAV) -> Optional[int]:
        """1-based priority of an agent, None when absent."""
        for position, entry in enumerate(self.entries, start=1):
            if entry.agent_id == agent_id and entry.kind == kind:
                return position
        return None

    def to_list(self) -> List[list]:
        return [
            [e.kind.value, e.agent_id, e.entry_time if math.isfinite(e.entry_time) else None]
            for e in self.entries
        ]


@dataclass(frozen=True)
class VelocityCommandSet:
    """Commanded reference speed per CAV id."""
    v_ref: Dict[int, float] = field(default_factory=dict)

    def __getitem__(self, cav_id: int) -> float:
        return self.v_ref[cav_id]

    def __contains__(self, cav_id: object) -> bool:
        return cav_id in self.v_ref

    def __len__(self) -> int:
        return len(self.v_ref)

    def get(self, cav_id: int, default: Optional[float] = None) -> Optional[float]:
        return self.v_ref.get(cav_id, default)

    def items(self):
        return sorted(self.v_ref.items())


@dataclass(frozen=True)
class FloorCase:
    """A CAV that still conflicts at zero speed."""
    cav_id: int
    conflicting: Tuple[Tuple[str, int], ...]


@dataclass(frozen=True)
class ManagementDecision:
    """Everything the manager decided at one tick."""
    t: float
    table: PriorityTable
    commands: VelocityCommandSet
    iterations: Dict[int, int]
    floor_cases: Tuple[FloorCase, ...]
    cav_regions: Dict[int, OccupiedRegion]
    hv_regions: Dict[int, OccupiedRegion]

    def yielded(self, v_max: float) -> List[int]:
        return [cav_id for cav_id, v in self.commands.items() if v < v_max - 1e-9]

    def to_dict(self) -> dict:
        return {
            "priority": self.table.to_list(),
            "commands": {str(k): v for k, v in self.commands.items()},
            "iterations": {str(k): v for k, v in sorted(self.iterations.items())},
            "floor_cases": [
                {"cav": f.cav_id, "conflicting": [list(c) for c in f.conflicting]} for f in self.floor_cases
            ],
        }
