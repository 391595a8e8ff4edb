"""
Range-gated publish/subscribe fabric emulating the V2X layer.
"""

import logging
import math
import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

import numpy as np

from ..errors import RateLimitError, SimulationError
from ..road_map.geometry import in_region
from ..road_map.models import Point, Region
from .messages import CavMessage, Envelope, InfraMessage, LinkKind, Message, MessageKind, payload_digest

logger = logging.getLogger(__name__)

INFRA_ID = 0
RATE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BusConfig:
    """Communication constraints of the emulated V2X layer."""
    v2v_range: float = 3.0
    v2i_region: Optional[Region] = None
    publish_rate_hz: float = 10.0
    latency_ticks: int = 0
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.v2v_range > 0:
            raise SimulationError(f"v2v_range must be positive, got {self.v2v_range}")
        if not self.publish_rate_hz > 0:
            raise SimulationError(f"publish_rate_hz must be positive, got {self.publish_rate_hz}")
        if self.latency_ticks < 0:
            raise SimulationError(f"latency_ticks must be non-negative, got {self.latency_ticks}")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise SimulationError(f"drop_probability must be in [0, 1], got {self.drop_probability}")


class BusEvent(NamedTuple):
    """One publish or delivery, as written to the message trace."""
    tick: int
    event_kind: str
    sender: int
    receiver: int
    message_kind: str
    digest: str


class MessageBus:
    """
    Shared message fabric for one simulation run.

    Messages published during tick k become deliverable at tick
    k + latency_ticks and only then; ``begin_tick`` discards everything older.
    Publish and deliver are guarded by a lock so agents may call them from
    worker threads; delivery order is by (publish_time, sender, target), never
    by arrival.
    """

    def __init__(self, config: BusConfig, infra_id: int = INFRA_ID, record_events: bool = False) -> None:
        self.config = config
        self.infra_id = infra_id
        self.record_events = record_events
        self._lock = threading.Lock()
        self._tick = 0
        self._queue: Dict[int, List[Envelope]] = defaultdict(list)
        self._last_publish: Dict[Tuple[str, int, Optional[int]], float] = {}
        self._last_stamp: Dict[Tuple[str, int], float] = {}
        self._registered: Set[int] = {infra_id}
        self._events: List[BusEvent] = []

    @property
    def tick(self) -> int:
        return self._tick

    @property
    def min_interval(self) -> float:
        return 1.0 / self.config.publish_rate_hz

    def register(self, receiver_id: int) -> None:
        with self._lock:
            self._registered.add(receiver_id)

    def unregister(self, receiver_id: int) -> None:
        with self._lock:
            self._registered.discard(receiver_id)

    def begin_tick(self, tick: int) -> None:
        """Advance to a new management tick, expiring undelivered messages."""
        with self._lock:
            self._tick = tick
            for due in [k for k in self._queue if k < tick]:
                del self._queue[due]

    def _dropped(self, envelope: Envelope) -> bool:
        p = self.config.drop_probability
        if p <= 0.0:
            return False
        payload = envelope.payload
        target = payload.target_id
        kind_code = 0 if payload.kind == MessageKind.CAV else 1
        rng = np.random.default_rng(
            [self.config.seed, self._tick, kind_code, payload.sender_id, 0 if target is None else target + 1]
        )
        return bool(rng.random() < p)

    def publish(self, envelope: Envelope) -> bool:
        """
        Enqueue a message for delivery.

        Returns:
            False if the message was lost to the configured drop probability

        Raises:
            RateLimitError: if the (sender, target) stream published within the
                last cadence window
        """
        payload = envelope.payload
        if not math.isfinite(envelope.publish_time):
            raise SimulationError("Envelope publish_time must be finite")

        stream = (payload.kind.value, payload.sender_id, payload.target_id)
        with self._lock:
            last = self._last_publish.get(stream)
            if last is not None and envelope.publish_time - last < self.min_interval - RATE_TOLERANCE:
                raise RateLimitError(
                    f"{payload.kind.value} sender {payload.sender_id} -> {payload.target_id} "
                    f"published {envelope.publish_time - last:.3f}s after its previous message"
                )
            stamp_key = (payload.kind.value, payload.sender_id)
            if payload.t_stamp < self._last_stamp.get(stamp_key, -math.inf):
                raise SimulationError(f"Sender {payload.sender_id} timestamps went backwards")

            self._last_publish[stream] = envelope.publish_time
            self._last_stamp[stamp_key] = payload.t_stamp
            self._record("publish", payload, payload.sender_id, -1)

            if self._dropped(envelope):
                logger.debug(f"Dropped {payload.kind.value} message from {payload.sender_id}")
                return False
            self._queue[self._tick + self.config.latency_ticks].append(envelope)
            return True

    def deliver(self, receiver_id: int, receiver_position: Point, kind: LinkKind) -> List[Message]:
        """
        Messages a receiver can hear this tick.

        V2V: CAV messages published within ``v2v_range`` (inclusive) of the
        receiver, excluding its own. V2I to a CAV: infrastructure commands
        addressed to it, only while it is inside the V2I region. V2I to the
        infrastructure: CAV messages whose sender was inside the V2I region.
        """
        with self._lock:
            if receiver_id not in self._registered:
                raise SimulationError(f"Receiver {receiver_id} is not registered on the bus")
            current = sorted(self._queue.get(self._tick, []), key=lambda e: e.sort_key)

            if kind == LinkKind.V2V:
                selected = [
                    e for e in current
                    if isinstance(e.payload, CavMessage)
                    and e.payload.sender_id != receiver_id
                    and math.hypot(
                        e.sender_position[0] - receiver_position[0],
                        e.sender_position[1] - receiver_position[1],
                    ) <= self.config.v2v_range
                ]
            elif receiver_id == self.infra_id:
                selected = [
                    e for e in current
                    if isinstance(e.payload, CavMessage) and self._in_v2i(e.sender_position)
                ]
            elif self._in_v2i(receiver_position):
                selected = [
                    e for e in current
                    if isinstance(e.payload, InfraMessage) and e.payload.target_id == receiver_id
                ]
            else:
                selected = []

            for e in selected:
                self._record("deliver", e.payload, e.payload.sender_id, receiver_id)
            return [e.payload for e in selected]

    def _in_v2i(self, position: Point) -> bool:
        region = self.config.v2i_region
        return region is None or in_region(position, region)

    def _record(self, event_kind: str, payload: Message, sender: int, receiver: int) -> None:
        if self.record_events:
            self._events.append(
                BusEvent(self._tick, event_kind, sender, receiver, payload.kind.value, payload_digest(payload))
            )

    def drain_events(self) -> List[BusEvent]:
        """Recorded events so far, in a deterministic order, clearing the buffer."""
        with self._lock:
            events = sorted(self._events)
            self._events = []
        return events
