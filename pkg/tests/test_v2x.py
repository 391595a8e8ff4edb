import math

import numpy as np
import pytest

from src.errors import RateLimitError, SimulationError
from src.road_map.geometry import in_region
from src.road_map.models import PathRef
from src.v2x.bus import INFRA_ID, BusConfig, MessageBus
from src.v2x.messages import CavMessage, Envelope, InfraMessage, LinkKind, make_cav_message, payload_digest
from src.v2x.trace import MessageTraceWriter, read_message_trace
from src.vehicle_dynamics.models import VehicleState

PATH = PathRef.from_points([(0.0, 0.0), (1.0, 0.0)], segment_ids=(1,))


def cav_envelope(sender_id, position, t):
    state = VehicleState(x=position[0], y=position[1], psi=0.0, v=0.5)
    return Envelope(make_cav_message(state, PATH, sender_id, t), position, t)


def infra_envelope(target_id, v_ref, t, position=(3.0, 2.75)):
    return Envelope(InfraMessage(INFRA_ID, t, target_id, v_ref), position, t)


@pytest.fixture
def coverage(civat_graph):
    return civat_graph.region("v2i_coverage")


@pytest.fixture
def bus(coverage):
    bus = MessageBus(BusConfig(v2i_region=coverage), record_events=True)
    for receiver in (1, 2, 3):
        bus.register(receiver)
    return bus


class TestDelivery:
    """Range and region gating."""

    def test_v2v_boundary_is_inclusive(self, bus):
        bus.begin_tick(0)
        bus.publish(cav_envelope(1, (0.0, 0.0), 0.0))
        assert [m.sender_id for m in bus.deliver(2, (3.0, 0.0), LinkKind.V2V)] == [1]
        assert bus.deliver(3, (3.0001, 0.0), LinkKind.V2V) == []

    def test_v2v_excludes_own_messages(self, bus):
        bus.begin_tick(0)
        bus.publish(cav_envelope(1, (0.0, 0.0), 0.0))
        assert bus.deliver(1, (0.0, 0.0), LinkKind.V2V) == []

    def test_command_only_reaches_target_inside_coverage(self, bus):
        bus.begin_tick(0)
        bus.publish(infra_envelope(1, 0.3, 0.0))
        bus.publish(infra_envelope(2, 0.4, 0.0))
        received = bus.deliver(1, (3.0, 2.75), LinkKind.V2I)
        assert [(m.target_id, m.v_ref) for m in received] == [(1, 0.3)]
        assert bus.deliver(2, (0.5, 0.5), LinkKind.V2I) == []

    def test_infrastructure_hears_cavs_inside_coverage(self, bus):
        bus.begin_tick(0)
        bus.publish(cav_envelope(1, (3.0, 2.0), 0.0))
        bus.publish(cav_envelope(2, (0.5, 2.0), 0.0))
        assert [m.sender_id for m in bus.deliver(INFRA_ID, (3.0, 2.75), LinkKind.V2I)] == [1]

    def test_unregistered_receiver(self, bus):
        bus.begin_tick(0)
        with pytest.raises(SimulationError):
            bus.deliver(42, (0.0, 0.0), LinkKind.V2V)

    def test_delivery_order_is_by_sender(self, bus):
        bus.begin_tick(0)
        for sender in (3, 1, 2):
            bus.publish(cav_envelope(sender, (float(sender) * 0.1, 0.0), 0.0))
        bus.register(9)
        assert [m.sender_id for m in bus.deliver(9, (0.0, 0.0), LinkKind.V2V)] == [1, 2, 3]

    def test_gating_property(self, civat_graph, coverage):
        rng = np.random.default_rng(1234)
        min_x, min_y, max_x, max_y = civat_graph.bounds
        bus = MessageBus(BusConfig(v2i_region=coverage))
        bus.register(1)
        bus.register(2)
        violations = 0
        for k in range(10_000):
            t = round(k * 0.1, 9)
            bus.begin_tick(k)
            sender = (float(rng.uniform(min_x, max_x)), float(rng.uniform(min_y, max_y)))
            receiver = (float(rng.uniform(min_x, max_x)), float(rng.uniform(min_y, max_y)))
            bus.publish(cav_envelope(1, sender, t))
            bus.publish(infra_envelope(2, 0.5, t))

            v2v = bus.deliver(2, receiver, LinkKind.V2V)
            in_range = math.hypot(sender[0] - receiver[0], sender[1] - receiver[1]) <= 3.0
            v2i = bus.deliver(2, receiver, LinkKind.V2I)
            covered = in_region(receiver, coverage)
            violations += (len(v2v) == 1) != in_range
            violations += (len(v2i) == 1) != covered
        assert violations == 0


class TestTiming:
    """Latency, loss, rate limiting and trace recording."""

    def test_latency_delays_delivery(self, coverage):
        bus = MessageBus(BusConfig(v2i_region=coverage, latency_ticks=1))
        bus.register(2)
        bus.begin_tick(0)
        bus.publish(cav_envelope(1, (0.0, 0.0), 0.0))
        assert bus.deliver(2, (1.0, 0.0), LinkKind.V2V) == []
        bus.begin_tick(1)
        assert len(bus.deliver(2, (1.0, 0.0), LinkKind.V2V)) == 1
        bus.begin_tick(2)
        assert bus.deliver(2, (1.0, 0.0), LinkKind.V2V) == []

    def test_messages_expire_after_their_tick(self, bus):
        bus.begin_tick(0)
        bus.publish(cav_envelope(1, (0.0, 0.0), 0.0))
        bus.begin_tick(1)
        assert bus.deliver(2, (1.0, 0.0), LinkKind.V2V) == []

    def test_rate_limit(self, bus):
        bus.begin_tick(0)
        bus.publish(cav_envelope(1, (0.0, 0.0), 0.0))
        with pytest.raises(RateLimitError):
            bus.publish(cav_envelope(1, (0.0, 0.0), 0.05))
        bus.begin_tick(1)
        assert bus.publish(cav_envelope(1, (0.0, 0.0), 0.1))

    def test_commands_rate_limited_per_target(self, bus):
        bus.begin_tick(0)
        bus.publish(infra_envelope(1, 0.5, 0.0))
        bus.publish(infra_envelope(2, 0.5, 0.0))
        with pytest.raises(RateLimitError):
            bus.publish(infra_envelope(1, 0.4, 0.0))

    def test_drops_are_seeded(self, coverage):
        def delivered(seed):
            bus = MessageBus(BusConfig(v2i_region=coverage, drop_probability=0.5, seed=seed))
            outcomes = []
            for k in range(50):
                bus.begin_tick(k)
                outcomes.append(bus.publish(cav_envelope(1, (0.0, 0.0), round(k * 0.1, 9))))
            return outcomes

        first, second = delivered(5), delivered(5)
        assert first == second
        assert 0 < sum(first) < 50

    def test_bad_config(self):
        with pytest.raises(SimulationError):
            BusConfig(v2v_range=0.0)
        with pytest.raises(SimulationError):
            BusConfig(drop_probability=1.5)

    def test_message_trace_file(self, bus, tmp_path):
        bus.begin_tick(0)
        envelope = cav_envelope(1, (0.0, 0.0), 0.0)
        bus.publish(envelope)
        bus.deliver(2, (1.0, 0.0), LinkKind.V2V)
        events = bus.drain_events()
        assert [e.event_kind for e in events] == ["deliver", "publish"]
        assert all(e.digest == payload_digest(envelope.payload) for e in events)

        with MessageTraceWriter(tmp_path / "messages.trace") as writer:
            writer.write(events)
        assert read_message_trace(tmp_path / "messages.trace") == events
        assert bus.drain_events() == []


class TestMessages:
    """Message payloads."""

    def test_cav_message_round_trip(self):
        message = make_cav_message(VehicleState(1.0, 2.0, 0.5, 0.3), PATH, 7, 1.2)
        restored = CavMessage.from_dict(message.to_dict())
        assert restored == message
        assert restored.state == VehicleState(1.0, 2.0, 0.5, 0.3)

    def test_digest_changes_with_content(self):
        assert payload_digest(InfraMessage(0, 1.0, 1, 0.5)) != payload_digest(InfraMessage(0, 1.0, 1, 0.4))
