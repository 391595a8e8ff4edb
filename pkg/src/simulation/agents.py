"""
Simulated vehicles: connected CAVs and scripted human-driven vehicles.
"""

import logging
from typing import List, Optional

from ..errors import RateLimitError
from ..road_map.models import PathRef, RoadGraph
from ..road_map.routing import trim_path
from ..v2x.bus import MessageBus
from ..v2x.messages import CavMessage, Envelope, InfraMessage, LinkKind, make_cav_message
from ..vehicle_dynamics.bicycle import step_bicycle
from ..vehicle_dynamics.controllers import DEFAULT_LOOKAHEAD, find_leader, idm_velocity, pure_pursuit_steer
from ..vehicle_dynamics.models import ControlInput, VehicleState
from .scenario import VehicleSpec

logger = logging.getLogger(__name__)


class Vehicle:
    """State shared by both agent kinds: pose, path progress and arrival."""

    def __init__(self, spec: VehicleSpec, spawn_time: float, lookahead: float = DEFAULT_LOOKAHEAD) -> None:
        self.spec = spec
        self.id = spec.id
        self.state: VehicleState = spec.spawn_state
        self.path: PathRef = spec.path
        self.lookahead = lookahead
        self.spawned_at = spawn_time
        self.s = 0.0
        self.v_ref = spec.spawn_state.v
        self.arrived = False

    @property
    def is_cav(self) -> bool:
        return self.spec.is_cav

    def physics_step(self, dt: float) -> None:
        """Steer toward the path and integrate one physics step."""
        if self.arrived:
            return
        steering = pure_pursuit_steer(self.state, self.path, self.lookahead, self.spec.params, self.s)
        self.s = steering.arclength
        if steering.end_of_path:
            self.arrived = True
            return
        self.state = step_bicycle(self.state, ControlInput(self.v_ref, steering.delta), self.spec.params, dt)


class HumanDriver(Vehicle):
    """Non-connected vehicle following its scripted path and speed profile."""

    def update_speed(self, t: float) -> None:
        self.v_ref = self.spec.scripted_speed(t - self.spawned_at)


class CavAgent(Vehicle):
    """
    Connected vehicle.

    Publishes its state and remaining path each management tick, then plans
    with IDM against V2V neighbors. An infrastructure command received this
    tick caps the IDM speed.
    """

    def __init__(self, spec: VehicleSpec, spawn_time: float, graph: RoadGraph, lookahead: float = DEFAULT_LOOKAHEAD) -> None:
        super().__init__(spec, spawn_time, lookahead)
        self.graph = graph
        self.command: Optional[float] = None
        self.neighbors: List[CavMessage] = []
        self._published_path = spec.path

    def remaining_path(self) -> PathRef:
        trimmed = trim_path(self.graph, self.path, self.s)
        if trimmed.segment_ids != self._published_path.segment_ids:
            self._published_path = trimmed
        return self._published_path

    def publish(self, bus: MessageBus, t: float) -> Optional[CavMessage]:
        message = make_cav_message(self.state, self.remaining_path(), self.id, t)
        try:
            bus.publish(Envelope(message, self.state.position, t))
        except RateLimitError as e:
            logger.warning(f"CAV {self.id} publish rejected: {e}")
            return None
        return message

    def plan(self, bus: MessageBus, planning_dt: float) -> float:
        """Receive this tick's messages and choose the reference speed."""
        position = self.state.position
        self.neighbors = [m for m in bus.deliver(self.id, position, LinkKind.V2V) if isinstance(m, CavMessage)]
        commands = [
            m for m in bus.deliver(self.id, position, LinkKind.V2I)
            if isinstance(m, InfraMessage) and m.target_id == self.id
        ]
        self.command = commands[-1].v_ref if commands else None

        gap, leader_v = find_leader(self.s, self.path, self.neighbors, self.spec.params)
        v_idm = idm_velocity(self.state.v, gap, leader_v, self.spec.idm, planning_dt)
        self.v_ref = v_idm if self.command is None else min(self.command, v_idm)
        return self.v_ref
