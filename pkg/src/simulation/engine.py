"""
Deterministic fixed-step simulation loop.

Physics runs at 100 Hz, sensing at 20 Hz and messaging, HV identification and
intersection management at 10 Hz, all as integer multiples of the physics tick.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Set, TypeVar

import shapely

from ..hv_identification.identification import identify_hvs
from ..hv_identification.models import HvMemory
from ..intersection.manager import IntersectionManager
from ..intersection.models import ManagementDecision
from ..perception.boxes import box_corners
from ..perception.models import Detection, GroundTruthFrame, TruthVehicle
from ..perception.oracle import sense
from ..road_map.geometry import in_region, project_onto_path
from ..v2x.bus import INFRA_ID, BusEvent, MessageBus
from ..v2x.messages import CavMessage, Envelope, InfraMessage, LinkKind
from ..vehicle_dynamics.controllers import find_leader
from .agents import CavAgent, HumanDriver, Vehicle
from .collisions import check_collisions
from .metrics import Metrics
from .scenario import Scenario, VehicleSpec

logger = logging.getLogger(__name__)

PHYSICS_DT = 0.01
SENSE_EVERY = 5
MANAGE_EVERY = 10
TIME_DECIMALS = 9
TRACE_FORMAT = "coop-intersection-trace"
TRACE_VERSION = 1

T = TypeVar("T")


@dataclass
class SimulationResult:
    """Trace and metrics of one run."""
    header: Dict[str, Any]
    records: List[Dict[str, Any]]
    metrics: Metrics
    message_events: List[BusEvent] = field(default_factory=list)
    decisions: List[ManagementDecision] = field(default_factory=list)


def _vehicle_record(vehicle: Vehicle) -> Dict[str, Any]:
    s = vehicle.state
    return {"id": vehicle.id, "kind": vehicle.spec.kind.value, "x": s.x, "y": s.y, "psi": s.psi, "v": s.v}


class SimulationEngine:
    """
    Runs one scenario.

    Args:
        scenario: Validated scenario
        concurrent: Run per-CAV publish and plan phases on a thread pool. The
            bus sorts deliveries, so the trace equals the sequential one.
        record_messages: Keep bus publish/deliver events for the message trace
        keep_decisions: Keep full management decisions (occupied regions
            included) for inspection and plotting
    """

    def __init__(
        self,
        scenario: Scenario,
        concurrent: bool = False,
        record_messages: bool = False,
        keep_decisions: bool = False,
        max_workers: Optional[int] = None,
    ) -> None:
        self.scenario = scenario
        self.concurrent = concurrent
        self.keep_decisions = keep_decisions
        self.max_workers = max_workers
        self.bus = MessageBus(scenario.bus, INFRA_ID, record_events=record_messages)
        self.manager = IntersectionManager(
            scenario.graph, scenario.manager, footprints=scenario.footprints
        )
        self.memory = HvMemory()
        self.metrics = Metrics()
        self.vehicles: Dict[int, Vehicle] = {}
        self.pending = sorted(scenario.vehicles, key=lambda v: (v.spawn_time, v.id))
        self.latest_detections: List[Detection] = []
        self.infra_position = scenario.graph.region("intersection").centroid
        self._events: List[BusEvent] = []
        self._decisions: List[ManagementDecision] = []
        self._pool: Optional[ThreadPoolExecutor] = None
        self._held: Set[int] = set()

    def _each(self, fn: Callable[[CavAgent], T], agents: Sequence[CavAgent]) -> List[T]:
        if self._pool is None or len(agents) < 2:
            return [fn(a) for a in agents]
        return list(self._pool.map(fn, agents))

    def _cavs(self) -> List[CavAgent]:
        return [v for _, v in sorted(self.vehicles.items()) if isinstance(v, CavAgent)]

    def _spawn_blocker(self, spec: VehicleSpec) -> Optional[int]:
        """
        Id of a vehicle occupying the spawn slot of ``spec``, if any.

        The slot is taken when a footprint overlaps the spawn footprint or a
        vehicle ahead on the spawn path is within the IDM minimum gap.
        """
        start = spec.spawn_state
        spawn_box = shapely.Polygon(box_corners(start.x, start.y, start.psi, *spec.params.footprint))
        s_spawn, _ = project_onto_path(start.position, spec.path)
        for vehicle_id, vehicle in sorted(self.vehicles.items()):
            state = vehicle.state
            box = shapely.Polygon(box_corners(state.x, state.y, state.psi, *vehicle.spec.params.footprint))
            if spawn_box.intersects(box):
                return vehicle_id
            gap, _ = find_leader(s_spawn, spec.path, [state], spec.params)
            if gap <= spec.idm.min_gap:
                return vehicle_id
        return None

    def _spawn(self, t: float) -> None:
        held: List[VehicleSpec] = []
        while self.pending and self.pending[0].spawn_time <= t + 1e-9:
            spec = self.pending.pop(0)
            blocker = self._spawn_blocker(spec)
            if blocker is not None:
                if spec.id not in self._held:
                    self._held.add(spec.id)
                    logger.info(f"Spawn of {spec.kind.value} {spec.id} held at t={t:.2f}: slot taken by {blocker}")
                held.append(spec)
                continue
            if spec.is_cav:
                agent: Vehicle = CavAgent(spec, t, self.scenario.graph)
                self.bus.register(spec.id)
            else:
                agent = HumanDriver(spec, t)
            self.vehicles[spec.id] = agent
            logger.debug(f"Spawned {spec.kind.value} {spec.id} ({spec.name}) at t={t:.2f}")
        self.pending[:0] = held

    def _truth(self, t: float) -> GroundTruthFrame:
        return GroundTruthFrame(
            t=t,
            vehicles=tuple(
                TruthVehicle(v.id, v.state, v.spec.params.length, v.spec.params.width, v.is_cav)
                for _, v in sorted(self.vehicles.items())
            ),
        )

    def _sense(self, t: float) -> float:
        start = time.perf_counter()
        frame = self._truth(t)
        self.latest_detections = sense(frame, self.scenario.noise, self.scenario.coverage, self.scenario.faults)
        elapsed = (time.perf_counter() - start) * 1000.0
        coverage = self.scenario.coverage
        covered = GroundTruthFrame(t, tuple(v for v in frame.vehicles if in_region(v.state.position, coverage)))
        self.metrics.record_frame(covered, self.latest_detections)
        self.metrics.record_detection_timing(elapsed)
        return elapsed

    def _manage(self, m: int, t: float, sense_ms: float) -> Dict[str, Any]:
        bus = self.bus
        bus.begin_tick(m)
        cavs = self._cavs()

        published = [msg for msg in self._each(lambda a: a.publish(bus, t), cavs) if msg is not None]

        received = [
            msg for msg in bus.deliver(INFRA_ID, self.infra_position, LinkKind.V2I)
            if isinstance(msg, CavMessage)
        ]

        start = time.perf_counter()
        hvs, self.memory = identify_hvs(
            self.latest_detections, received, self.memory, self.scenario.thresholds, self.scenario.graph, t=t
        )
        ident_ms = (time.perf_counter() - start) * 1000.0

        start = time.perf_counter()
        decision = self.manager.manage(t, received, list(self.memory.estimates))
        manage_ms = (time.perf_counter() - start) * 1000.0

        for cav_id, v_ref in decision.commands.items():
            bus.publish(Envelope(InfraMessage(INFRA_ID, t, cav_id, v_ref), self.infra_position, t))

        self._each(lambda a: a.plan(bus, 1.0 / self.scenario.manager.tick_rate_hz), cavs)

        self.metrics.record_timing(sense_ms, ident_ms, manage_ms)
        self.metrics.record_decision(decision, self.scenario.manager.v_max)
        if self.keep_decisions:
            self._decisions.append(decision)
        if bus.record_events:
            self._events.extend(bus.drain_events())

        return {
            "m": m,
            "published": [msg.sender_id for msg in published],
            "received": [msg.sender_id for msg in sorted(received, key=lambda x: x.sender_id)],
            "detections": [[d.x_hat, d.y_hat, d.psi_hat, d.score] for d in self.latest_detections],
            "hvs": [hv.to_dict() for hv in hvs],
            "tracked": [hv.track_id for hv in self.memory.estimates],
            "decision": decision.to_dict(),
            "cav_inputs": {
                str(a.id): {"command": a.command, "v_ref": a.v_ref, "neighbors": len(a.neighbors)} for a in cavs
            },
        }

    def _physics(self, t: float) -> None:
        for vehicle_id, vehicle in sorted(self.vehicles.items()):
            if isinstance(vehicle, HumanDriver):
                vehicle.update_speed(t)
            vehicle.physics_step(PHYSICS_DT)
            if vehicle.arrived:
                travel = round(t + PHYSICS_DT - vehicle.spawned_at, TIME_DECIMALS)
                self.metrics.travel_times[vehicle_id] = travel
                del self.vehicles[vehicle_id]
                if vehicle.is_cav:
                    self.bus.unregister(vehicle_id)
                logger.info(f"{vehicle.spec.kind.value} {vehicle_id} arrived after {travel:.2f}s")

    def header(self) -> Dict[str, Any]:
        s = self.scenario
        return {
            "format": TRACE_FORMAT,
            "version": TRACE_VERSION,
            "scenario": s.name,
            "seed": s.seed,
            "duration": s.duration,
            "physics_dt": PHYSICS_DT,
            "sense_every": SENSE_EVERY,
            "manage_every": MANAGE_EVERY,
            "v_max": s.manager.v_max,
            "vehicles": [
                {
                    "id": v.id,
                    "kind": v.kind.value,
                    "name": v.name,
                    "path": list(v.path.segment_ids),
                    "footprint": list(v.params.footprint),
                    "spawn_time": v.spawn_time,
                }
                for v in s.vehicles
            ],
        }

    def run(self) -> SimulationResult:
        n_ticks = int(round(self.scenario.duration / PHYSICS_DT))
        records: List[Dict[str, Any]] = []
        logger.info(
            f"Running '{self.scenario.name}' for {self.scenario.duration}s "
            f"({n_ticks} ticks, seed {self.scenario.seed}, concurrent={self.concurrent})"
        )

        if self.concurrent:
            self._pool = ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix="cav")
        try:
            sense_ms = 0.0
            for tick in range(n_ticks):
                t = round(tick * PHYSICS_DT, TIME_DECIMALS)
                self._spawn(t)
                record: Dict[str, Any] = {
                    "tick": tick,
                    "t": t,
                    "vehicles": [_vehicle_record(v) for _, v in sorted(self.vehicles.items())],
                }
                if tick % SENSE_EVERY == 0:
                    sense_ms += self._sense(t)
                if tick % MANAGE_EVERY == 0:
                    record["manage"] = self._manage(tick // MANAGE_EVERY, t, sense_ms)
                    sense_ms = 0.0
                records.append(record)
                self._physics(t)
        finally:
            if self._pool is not None:
                self._pool.shutdown(wait=True)
                self._pool = None

        footprints = self.scenario.footprints
        self.metrics.collision_events = check_collisions(records, footprints)
        if self.metrics.collision_events:
            logger.warning(f"{len(self.metrics.collision_events)} collision event(s) in '{self.scenario.name}'")
        logger.info(f"Finished '{self.scenario.name}': {len(self.metrics.travel_times)} vehicles arrived")
        return SimulationResult(
            header=self.header(),
            records=records,
            metrics=self.metrics,
            message_events=self._events,
            decisions=self._decisions,
        )


def run_scenario(
    s: Scenario,
    concurrent: bool = False,
    record_messages: bool = False,
    keep_decisions: bool = False,
) -> SimulationResult:
    """Run a scenario to completion and return its trace and metrics."""
    return SimulationEngine(s, concurrent, record_messages, keep_decisions).run()
