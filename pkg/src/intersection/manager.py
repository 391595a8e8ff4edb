"""
Priority-based intersection management.

CAVs inside the intersection are served first-in-first-served behind every
identified HV. Each CAV starts at v_max and steps down the velocity ladder
until its predicted occupied region clears all higher-priority regions.
"""

import logging
import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import shapely

from ..errors import HorizonMismatchError
from ..hv_identification.models import HvEstimate
from ..road_map.geometry import in_region
from ..road_map.models import PathRef, Region, RoadGraph
from ..road_map.routing import candidate_paths_from_entry
from ..v2x.messages import CavMessage
from ..vehicle_dynamics.models import VehicleState
from ..vehicle_dynamics.prediction import predict_poses
from .models import (
    AgentKind,
    ConflictMode,
    FloorCase,
    ManagementDecision,
    ManagerConfig,
    OccupiedRegion,
    PriorityEntry,
    PriorityTable,
    VelocityCommandSet,
)

logger = logging.getLogger(__name__)

DEFAULT_FOOTPRINT = (0.30, 0.15)


def assign_priorities(
    cav_messages: Sequence[CavMessage],
    hvs: Sequence[HvEstimate],
    entry_log: Mapping[int, float],
    intersection: Region,
) -> PriorityTable:
    """
    Priority order of the agents inside the intersection.

    HVs come first ordered by first sighting, then CAVs by entry time with ties
    going to the lower id. A CAV missing from ``entry_log`` sorts last.
    """
    hv_entries = sorted(
        (
            PriorityEntry(hv.track_id, AgentKind.HV, hv.first_seen)
            for hv in hvs
            if in_region(hv.position, intersection)
        ),
        key=lambda e: (e.entry_time, e.agent_id),
    )
    cav_entries = sorted(
        (
            PriorityEntry(m.sender_id, AgentKind.CAV, entry_log.get(m.sender_id, math.inf))
            for m in cav_messages
            if in_region(m.position, intersection)
        ),
        key=lambda e: (e.entry_time, e.agent_id),
    )
    return PriorityTable(tuple(hv_entries + cav_entries))


def _inflated(footprint: Tuple[float, float], b_safe: float) -> Tuple[float, float]:
    return footprint[0] + 2.0 * b_safe, footprint[1] + 2.0 * b_safe


def predict_occupied_region(
    state: VehicleState,
    path: PathRef,
    v_const: float,
    cfg: ManagerConfig,
    footprint: Tuple[float, float] = DEFAULT_FOOTPRINT,
    agent_id: Optional[int] = None,
) -> OccupiedRegion:
    """
    Inflated footprints along a constant-speed prediction.

    Args:
        state: Current pose; projected onto the path
        path: Intended path
        v_const: Assumed constant speed
        cfg: Horizon, step and safety buffer
        footprint: Vehicle (length, width) before inflation

    Returns:
        Single-branch region of ``cfg.horizon`` rectangles, each side grown by
        ``b_safe`` on both ends
    """
    centers, headings = predict_poses(state, path, v_const, cfg.horizon, cfg.dt)
    length, width = _inflated(footprint, cfg.b_safe)
    return OccupiedRegion(centers[None], headings[None], length, width, agent_id, AgentKind.CAV)


def hv_occupied_union(
    hv: HvEstimate,
    cfg: ManagerConfig,
    footprint: Tuple[float, float] = DEFAULT_FOOTPRINT,
    graph: Optional[RoadGraph] = None,
) -> OccupiedRegion:
    """
    Occupancy of an HV over all of its candidate paths at v_max.

    An HV without candidates falls back to every route from its nearest node;
    if even that is empty it is held stationary at its pose.
    """
    paths: List[PathRef] = list(hv.candidate_paths)
    if not paths and graph is not None:
        paths = candidate_paths_from_entry(graph, hv.position, math.inf)
        logger.debug(f"HV {hv.track_id} has no candidates, predicting over {len(paths)} fallback routes")
    if not paths:
        paths = [PathRef.at_point(hv.position)]

    state = VehicleState(x=hv.pose[0], y=hv.pose[1], psi=hv.pose[2], v=cfg.v_max)
    branches = [predict_poses(state, path, cfg.v_max, cfg.horizon, cfg.dt) for path in paths]
    centers = np.stack([c for c, _ in branches])
    headings = np.stack([h for _, h in branches])
    if len(paths) == 1 and paths[0].is_empty:
        headings = np.full_like(headings, hv.pose[2])
    length, width = _inflated(footprint, cfg.b_safe)
    return OccupiedRegion(centers, headings, length, width, hv.track_id, AgentKind.HV)


def regions_conflict(
    a: OccupiedRegion, b: OccupiedRegion, mode: ConflictMode = ConflictMode.TIME_ALIGNED
) -> bool:
    """
    Whether two occupied regions overlap.

    Time-aligned mode compares step h of ``a`` only with step h of ``b``;
    any-time mode compares every pair of steps.

    Raises:
        HorizonMismatchError: if the horizons differ
    """
    if a.horizon != b.horizon:
        raise HorizonMismatchError(f"Horizon {a.horizon} vs {b.horizon}")

    reach = a.radius + b.radius
    ca, cb = a.centers, b.centers
    if ConflictMode(mode) == ConflictMode.TIME_ALIGNED:
        diff = ca[:, None, :, :] - cb[None, :, :, :]
        near = np.hypot(diff[..., 0], diff[..., 1]) <= reach
        ia, ib, h = np.nonzero(near)
        if len(ia) == 0:
            return False
        return bool(shapely.intersects(a.polygons[ia, h], b.polygons[ib, h]).any())

    diff = ca[:, None, :, None, :] - cb[None, :, None, :, :]
    near = np.hypot(diff[..., 0], diff[..., 1]) <= reach
    ia, ib, ha, hb = np.nonzero(near)
    if len(ia) == 0:
        return False
    return bool(shapely.intersects(a.polygons[ia, ha], b.polygons[ib, hb]).any())


def _resolve(
    table: PriorityTable,
    cav_messages: Sequence[CavMessage],
    hv_regions: Sequence[OccupiedRegion],
    cfg: ManagerConfig,
    footprints: Optional[Mapping[int, Tuple[float, float]]] = None,
) -> Tuple[VelocityCommandSet, Dict[int, int], List[FloorCase], Dict[int, OccupiedRegion]]:
    by_id = {m.sender_id: m for m in cav_messages}
    constraints: List[OccupiedRegion] = list(hv_regions)
    commands: Dict[int, float] = {}
    iterations: Dict[int, int] = {}
    floors: List[FloorCase] = []
    accepted: Dict[int, OccupiedRegion] = {}

    for cav_id in table.cav_ids:
        message = by_id[cav_id]
        footprint = (footprints or {}).get(cav_id, DEFAULT_FOOTPRINT)
        count = 0
        region = None
        conflicting: List[OccupiedRegion] = []
        for v in cfg.ladder:
            count += 1
            region = predict_occupied_region(message.state, message.path, v, cfg, footprint, cav_id)
            conflicting = [c for c in constraints if regions_conflict(region, c, cfg.conflict_mode)]
            if not conflicting:
                break
            logger.debug(f"CAV {cav_id} conflicts at {v:.2f} m/s with {len(conflicting)} region(s)")
        else:
            v = 0.0
            case = FloorCase(cav_id, tuple((c.kind.value, c.agent_id) for c in conflicting))
            floors.append(case)
            logger.warning(f"CAV {cav_id} still conflicts at 0 m/s with {list(case.conflicting)}; commanding 0")

        commands[cav_id] = v
        iterations[cav_id] = count
        accepted[cav_id] = region
        constraints.append(region)

    return VelocityCommandSet(commands), iterations, floors, accepted


def resolve_velocities(
    table: PriorityTable,
    cav_messages: Sequence[CavMessage],
    hv_regions: Sequence[OccupiedRegion],
    cfg: ManagerConfig,
    footprints: Optional[Mapping[int, Tuple[float, float]]] = None,
) -> VelocityCommandSet:
    """
    Commanded velocity for each CAV in the table.

    CAVs are handled in priority order; each accepted region, including a
    floored CAV's stationary one, constrains every lower-priority CAV.
    """
    commands, _, _, _ = _resolve(table, cav_messages, hv_regions, cfg, footprints)
    return commands


class IntersectionManager:
    """
    Infrastructure-side manager holding the entry log across ticks.

    Args:
        graph: Road graph providing the intersection region
        cfg: Manager configuration
        footprints: Per-CAV (length, width); unknown ids use 0.30 x 0.15
        hv_footprint: Assumed HV (length, width)
    """

    def __init__(
        self,
        graph: RoadGraph,
        cfg: ManagerConfig,
        footprints: Optional[Mapping[int, Tuple[float, float]]] = None,
        hv_footprint: Tuple[float, float] = DEFAULT_FOOTPRINT,
    ) -> None:
        self.graph = graph
        self.cfg = cfg
        self.intersection = graph.region("intersection")
        self.footprints = dict(footprints or {})
        self.hv_footprint = hv_footprint
        self.entry_log: Dict[int, float] = {}

    def update_entry_log(self, t: float, cav_messages: Sequence[CavMessage]) -> None:
        for message in cav_messages:
            if in_region(message.position, self.intersection):
                if message.sender_id not in self.entry_log:
                    self.entry_log[message.sender_id] = t
                    logger.debug(f"CAV {message.sender_id} entered the intersection at t={t:.2f}")
            else:
                self.entry_log.pop(message.sender_id, None)

    def manage(
        self, t: float, cav_messages: Sequence[CavMessage], hvs: Sequence[HvEstimate]
    ) -> ManagementDecision:
        """
        One management tick.

        Every known HV constrains the CAVs through its predicted occupancy; only
        agents inside the intersection enter the priority table, and only CAVs
        in the table receive a command.
        """
        cav_messages = sorted(cav_messages, key=lambda m: m.sender_id)
        self.update_entry_log(t, cav_messages)
        table = assign_priorities(cav_messages, hvs, self.entry_log, self.intersection)

        hv_regions = {
            hv.track_id: hv_occupied_union(hv, self.cfg, self.hv_footprint, self.graph)
            for hv in sorted(hvs, key=lambda h: (h.first_seen, h.track_id))
        }
        commands, iterations, floors, cav_regions = _resolve(
            table, cav_messages, list(hv_regions.values()), self.cfg, self.footprints
        )
        return ManagementDecision(
            t=t,
            table=table,
            commands=commands,
            iterations=iterations,
            floor_cases=tuple(floors),
            cav_regions=cav_regions,
            hv_regions=hv_regions,
        )
