import dataclasses
import json

import numpy as np
import pytest

from src.errors import LogFormatError, ScenarioError
from src.intersection.manager import predict_occupied_region, regions_conflict
from src.intersection.models import OccupiedRegion
from src.perception.oracle import FaultPlan
from src.simulation.collisions import check_collisions
from src.simulation.engine import run_scenario
from src.simulation.metrics import CollisionEvent
from src.simulation.reports import build_summary, emit_reports, format_timing_table
from src.simulation.scenario import load_scenario
from src.simulation.trace import command_table, read_trace, summarize_trace, write_trace
from src.vehicle_dynamics.models import VehicleState

CROSSING_SEGMENTS = {
    "south": [[101, 201, 301], [101, 202, 304]],
    "north": [[102, 203, 302], [102, 204, 303]],
    "west": [[103, 205, 303], [103, 206, 301]],
    "east": [[104, 207, 304], [104, 208, 302]],
}


@pytest.fixture
def bundled(app_config):
    def load(name, duration=None):
        scenario = load_scenario(app_config.scenario_path(name))
        return scenario.with_duration(duration) if duration else scenario

    return load


def cav(vehicle_id, segments, spawn_time=0.0):
    return {"id": vehicle_id, "kind": "cav", "segments": segments, "spawn_time": spawn_time}


def manage_records(result):
    return [r for r in result.records if "manage" in r]


class TestScenarioLoading:
    """Scenario validation."""

    def test_bundled_scenarios_load(self, app_config):
        names = app_config.bundled_scenarios()
        assert {"fully_cav", "mixed_traffic", "sensor_faults"} <= set(names)
        for name in names:
            assert load_scenario(app_config.scenario_path(name)).vehicles

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_scenario(tmp_path / "missing.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("vehicles: [\n", encoding="utf-8")
        with pytest.raises(ScenarioError):
            load_scenario(path)

    @pytest.mark.parametrize("vehicles", [
        [cav(1, [101, 201, 301]), cav(1, [103, 205, 303])],
        [{"id": 1, "kind": "cav", "route": [11, 14], "segments": [101, 201, 301]}],
        [{"id": 1, "kind": "cav"}],
        [{"id": 1, "kind": "cav", "route": [11, 99]}],
        [{"id": 1, "kind": "cav", "segments": [101, 203]}],
        [{"id": 1, "kind": "cav", "route": [11, 14], "velocity_profile": [[0.0, 0.3]]}],
        [{"id": 1, "kind": "cav", "route": [11, 14], "pose": [3.7, 1.0, 1.57]}],
        [{"id": 0, "kind": "cav", "route": [11, 14]}],
    ])
    def test_invalid_vehicles(self, make_scenario, vehicles):
        with pytest.raises(ScenarioError):
            make_scenario(vehicles)

    def test_unknown_section_key(self, make_scenario):
        with pytest.raises(ScenarioError):
            make_scenario([], bus={"range": 3.0})

    def test_unknown_region(self, make_scenario):
        with pytest.raises(ScenarioError):
            make_scenario([], noise={"coverage": "parking_lot"})

    def test_seed_and_duration_overrides(self, bundled):
        scenario = bundled("mixed_traffic").with_seed(99)
        assert (scenario.seed, scenario.bus.seed, scenario.noise.seed) == (99, 99, 99)
        with pytest.raises(ScenarioError):
            scenario.with_duration(0.0)

    def test_noise_overrides_apply_on_top_of_preset(self, make_scenario):
        scenario = make_scenario([], noise={"preset": "civat_like", "p_fn": 0.5})
        assert scenario.noise.p_fn == 0.5
        assert scenario.noise.sigma_pos == 0.02


class TestEngine:
    """The fixed-step loop."""

    def test_empty_scenario(self, make_scenario):
        result = run_scenario(make_scenario([], duration=2.0))
        assert len(result.records) == 200
        assert len(manage_records(result)) == 20
        assert all(r["vehicles"] == [] for r in result.records)
        assert result.metrics.collision_events == []

    def test_record_layout(self, make_scenario):
        result = run_scenario(make_scenario([cav(1, [103, 205, 303])], duration=1.0))
        first = result.records[0]
        assert first["tick"] == 0 and first["t"] == 0.0
        assert set(first["vehicles"][0]) == {"id", "kind", "x", "y", "psi", "v"}
        assert set(first["manage"]) == {
            "m", "published", "received", "detections", "hvs", "tracked", "decision", "cav_inputs",
        }
        assert result.records[10]["manage"]["m"] == 1
        assert "manage" not in result.records[5]

    def test_late_spawn(self, make_scenario):
        result = run_scenario(make_scenario([cav(1, [103, 205, 303], spawn_time=0.5)], duration=1.0))
        assert result.records[49]["vehicles"] == []
        assert [v["id"] for v in result.records[50]["vehicles"]] == [1]

    def test_vehicle_arrives_and_leaves(self, make_scenario):
        result = run_scenario(make_scenario([cav(1, [303])], duration=6.0))
        assert 1 in result.metrics.travel_times
        assert result.records[-1]["vehicles"] == []

    def test_occupied_spawn_slot_is_held(self, make_scenario):
        vehicles = [cav(1, [103, 205, 303]), cav(2, [103, 205, 303])]
        result = run_scenario(make_scenario(vehicles, duration=3.0))

        assert result.metrics.collision_events == []
        assert [v["id"] for v in result.records[0]["vehicles"]] == [1]
        first = next(r for r in result.records if any(v["id"] == 2 for v in r["vehicles"]))
        assert first["tick"] > 0
        leader = next(v for v in first["vehicles"] if v["id"] == 1)
        follower = next(v for v in first["vehicles"] if v["id"] == 2)
        assert np.hypot(leader["x"] - follower["x"], leader["y"] - follower["y"]) - 0.30 > 0.30

    def test_spawn_waits_while_slot_stays_taken(self, make_scenario):
        # a stopped vehicle on the lane entry keeps the slot taken for the whole run
        stopped = {"id": 1, "kind": "hv", "segments": [102, 204, 303], "speed": 0.0}
        vehicles = [stopped, cav(2, [102, 204, 303], spawn_time=0.5)]
        result = run_scenario(make_scenario(vehicles, duration=2.0))

        assert result.metrics.collision_events == []
        assert all(v["id"] != 2 for r in result.records for v in r["vehicles"])

    def test_every_sense_call_is_timed(self, make_scenario):
        result = run_scenario(make_scenario([cav(1, [103, 205, 303])], duration=1.0))

        assert len(result.metrics.timings["Object Detection"]) == 20
        assert len(result.metrics.timings["HV Identification"]) == 10
        assert len(result.metrics.tick_totals) == 10

    def test_hv_follows_speed_profile(self, make_scenario):
        hv = {
            "id": 5, "kind": "hv", "segments": [103, 205, 303], "speed": 0.5,
            "velocity_profile": [[0.0, 0.5], [1.0, 0.0]],
        }
        result = run_scenario(make_scenario([hv], duration=4.0))
        assert result.records[-1]["vehicles"][0]["v"] < 0.01

    def test_same_seed_gives_identical_trace_files(self, bundled, tmp_path):
        scenario = bundled("mixed_traffic", duration=6.0)
        first = run_scenario(scenario)
        second = run_scenario(scenario)
        a = write_trace(tmp_path / "a.jsonl", first.header, first.records)
        b = write_trace(tmp_path / "b.jsonl", second.header, second.records)
        assert a.read_bytes() == b.read_bytes()

    def test_concurrent_matches_sequential(self, bundled, tmp_path):
        scenario = bundled("fully_cav", duration=6.0)
        sequential = run_scenario(scenario)
        concurrent = run_scenario(scenario, concurrent=True)
        a = write_trace(tmp_path / "seq.jsonl", sequential.header, sequential.records)
        b = write_trace(tmp_path / "par.jsonl", concurrent.header, concurrent.records)
        assert a.read_bytes() == b.read_bytes()

    def test_message_events_recorded_on_request(self, bundled):
        scenario = bundled("fully_cav", duration=1.0)
        assert run_scenario(scenario).message_events == []
        events = run_scenario(scenario, record_messages=True).message_events
        assert {e.event_kind for e in events} == {"publish", "deliver"}


class TestBundledScenarios:
    """End-to-end behavior of the shipped scenarios."""

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["fully_cav", "mixed_traffic", "sensor_faults"])
    def test_no_collisions(self, bundled, name):
        result = run_scenario(bundled(name))
        assert result.metrics.collision_events == []

    @pytest.mark.slow
    def test_fully_cav_issues_yield_commands(self, bundled):
        result = run_scenario(bundled("fully_cav"))
        assert result.metrics.yield_events
        assert set(result.metrics.travel_times) == {1, 2, 3, 4, 5}

    @pytest.mark.slow
    def test_fully_cav_management_is_fast(self, bundled):
        result = run_scenario(bundled("fully_cav"))
        assert result.metrics.management_mean_ms() < 10.0

    @pytest.mark.slow
    def test_mixed_traffic_hv_ranks_first(self, bundled):
        result = run_scenario(bundled("mixed_traffic"))
        priorities = [r["manage"]["decision"]["priority"] for r in manage_records(result)]
        shared = [p for p in priorities if any(e[0] == "hv" for e in p) and any(e[0] == "cav" for e in p)]
        assert shared
        assert all(p[0][0] == "hv" for p in shared)
        # first-in-first-served among CAVs once the HV has left
        last_hv = max(k for k, p in enumerate(priorities) if any(e[0] == "hv" for e in p))
        assert any(p and all(e[0] == "cav" for e in p) for p in priorities[last_hv + 1:])

    @pytest.mark.slow
    def test_mixed_traffic_left_turn_pruned(self, bundled):
        result = run_scenario(bundled("mixed_traffic", duration=12.0))
        endings = [
            {tuple(c[-2:]) for c in hv["candidates"]}
            for r in manage_records(result)
            for hv in r["manage"]["hvs"]
        ]
        assert endings
        first_pair = endings.index({(201, 301), (202, 304)})
        assert {(202, 304)} in endings[first_pair + 1:]
        # once pruned the straight hypothesis does not come back
        pruned = first_pair + 1 + endings[first_pair + 1:].index({(202, 304)})
        assert all((201, 301) not in e for e in endings[pruned:])

    @pytest.mark.slow
    def test_mixed_traffic_both_hv_branches_constrain_cavs(self, bundled):
        scenario = bundled("mixed_traffic", duration=12.0)
        cfg = scenario.manager
        specs = {v.id: v for v in scenario.vehicles}
        result = run_scenario(scenario, keep_decisions=True)
        constraining = set()
        for record, decision in zip(manage_records(result), result.decisions):
            for hv_id, union in decision.hv_regions.items():
                if union.n_branches != 2:
                    continue
                for vehicle in record["vehicles"]:
                    spec = specs[vehicle["id"]]
                    if not spec.is_cav or vehicle["id"] not in decision.commands:
                        continue
                    state = VehicleState(vehicle["x"], vehicle["y"], vehicle["psi"], vehicle["v"])
                    full_speed = predict_occupied_region(state, spec.path, cfg.v_max, cfg, spec.params.footprint)
                    for b in range(2):
                        branch = OccupiedRegion(
                            union.centers[b:b + 1], union.headings[b:b + 1], union.length, union.width, hv_id, union.kind
                        )
                        if regions_conflict(full_speed, branch, cfg.conflict_mode):
                            assert decision.commands[vehicle["id"]] < cfg.v_max
                            constraining.add(b)
        assert constraining == {0, 1}

    def test_injected_detection_never_tracked(self, bundled):
        result = run_scenario(bundled("sensor_faults", duration=4.0))
        at_two = next(r for r in result.records if r["t"] == 2.0)
        assert [3.0, 2.75] in [d[:2] for d in at_two["manage"]["detections"]]
        assert all(r["manage"]["hvs"] == [] and r["manage"]["tracked"] == [] for r in manage_records(result))

    def test_missed_cav_detection_leaves_commands_unchanged(self, bundled):
        clean = bundled("fully_cav", duration=8.0)
        faulty = dataclasses.replace(clean, faults=FaultPlan(suppress_ids=frozenset({1})))
        assert command_table(run_scenario(clean).records) == command_table(run_scenario(faulty).records)

    @pytest.mark.slow
    def test_randomized_cav_traffic_is_collision_free(self, make_scenario):
        rng = np.random.default_rng(42)
        lanes = sorted(CROSSING_SEGMENTS)
        for trial in range(100):
            last_spawn = {}
            vehicles = []
            for vehicle_id in range(1, int(rng.integers(3, 7)) + 1):
                lane = lanes[rng.integers(len(lanes))]
                segments = CROSSING_SEGMENTS[lane][rng.integers(2)]
                spawn = round(float(rng.uniform(0.0, 6.0)), 1)
                if lane in last_spawn:
                    spawn = max(spawn, last_spawn[lane] + 2.0)
                last_spawn[lane] = spawn
                vehicles.append(cav(vehicle_id, segments, spawn))
            result = run_scenario(make_scenario(vehicles, duration=15.0, seed=trial), keep_decisions=True)
            assert result.metrics.collision_events == [], f"trial {trial}: {vehicles}"
            for decision in result.decisions:
                floored = {f.cav_id for f in decision.floor_cases}
                order = [i for i in decision.table.cav_ids if i not in floored]
                for k, low in enumerate(order):
                    for high in order[:k]:
                        assert not regions_conflict(decision.cav_regions[high], decision.cav_regions[low])


class TestCollisions:
    """Footprint contact detection."""

    @staticmethod
    def record(tick, b_x):
        return {
            "tick": tick,
            "t": round(tick * 0.01, 9),
            "vehicles": [
                {"id": 1, "x": 0.0, "y": 0.0, "psi": 0.0},
                {"id": 2, "x": b_x, "y": 0.0, "psi": 0.0},
            ],
        }

    def test_contact_episodes(self):
        positions = [1.0, 0.29, 0.2, 0.1, 1.0, 0.25]
        records = [self.record(k, x) for k, x in enumerate(positions)]
        events = check_collisions(records, {1: (0.30, 0.15), 2: (0.30, 0.15)})
        assert events == [CollisionEvent(1, 0.01, 1, 2), CollisionEvent(5, 0.05, 1, 2)]

    def test_footprint_size_matters(self):
        records = [self.record(0, 0.35)]
        assert check_collisions(records, {}) == []
        assert len(check_collisions(records, {1: (0.5, 0.2), 2: (0.5, 0.2)})) == 1

    def test_near_miss_is_not_a_collision(self):
        assert check_collisions([self.record(0, 0.31)], {}) == []

    def test_overlap_in_first_record(self):
        events = check_collisions([self.record(0, 0.0), self.record(1, 0.0)], {})
        assert events == [CollisionEvent(0, 0.0, 1, 2)]

    def test_hv_runs_into_stopped_vehicle(self, make_scenario):
        vehicles = [
            {"id": 1, "kind": "hv", "segments": [103, 205, 303], "spawn_offset": 1.0, "speed": 0.0},
            {"id": 2, "kind": "hv", "segments": [103, 205, 303], "speed": 0.5},
        ]
        result = run_scenario(make_scenario(vehicles, duration=3.0))

        assert len(result.metrics.collision_events) == 1
        event = result.metrics.collision_events[0]
        assert (event.a, event.b) == (1, 2)
        assert event.tick > 100


class TestReports:
    """Report files and trace replay."""

    @pytest.fixture
    def result(self, bundled):
        return run_scenario(bundled("fully_cav", duration=5.0), record_messages=True, keep_decisions=True)

    def test_report_files(self, result, bundled, tmp_path):
        graph = bundled("fully_cav").graph
        written = emit_reports(result, tmp_path / "out", message_trace=True, plot=True, graph=graph)
        for name in ("trace", "messages", "timing", "commands", "collisions", "summary", "commands_plot", "snapshot_plot"):
            assert written[name].exists(), name
        assert json.loads(written["collisions"].read_text(encoding="utf-8")) == []
        header = written["commands"].read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("t,cav_")

    def test_timing_table(self, result):
        table = format_timing_table(result.metrics)
        lines = table.splitlines()
        assert lines[0].split() == ["Module", "Min", "Max", "Average"]
        assert [line[:26].strip() for line in lines[1:]] == [
            "Object Detection", "HV Identification", "Intersection Management", "Total",
        ]

    def test_replay_matches_live_summary(self, result, tmp_path):
        path = write_trace(tmp_path / "trace.jsonl", result.header, result.records)
        header, records = read_trace(path)
        assert summarize_trace(header, records) == summarize_trace(result.header, result.records)
        summary = build_summary(result)
        assert summary["ticks"] == 500
        assert summary["scenario"] == "fully_cav"
        assert summary["management_mean_ms"] is not None

    def test_corrupt_trace(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text('{"scenario": "x"}\n{"tick": 0, "t": 0.0, "vehicles": []}\nnot json\n', encoding="utf-8")
        with pytest.raises(LogFormatError) as exc_info:
            read_trace(path)
        assert exc_info.value.line_number == 3
