import json

import pytest
import yaml
from typer.testing import CliRunner

from src.cli import COLLISION_EXIT_CODE, app

runner = CliRunner()

FRAMES = "0.0 1\n1.0 2.0 0.0 0.3 0.15 1.0\n0.05 2\n1.1 2.0 0.0 0.3 0.15 0.9\n3.0 3.0 1.57 0.3 0.15 0.8\n"


@pytest.fixture
def crash_scenario(tmp_path):
    """A human driver running into a stopped vehicle ahead of it."""
    doc = {
        "version": 1,
        "name": "crash",
        "map": "civat_map",
        "duration": 3.0,
        "vehicles": [
            {"id": 1, "kind": "hv", "segments": [103, 205, 303], "spawn_offset": 1.0, "speed": 0.0},
            {"id": 2, "kind": "hv", "segments": [103, 205, 303], "speed": 0.5},
        ],
    }
    path = tmp_path / "crash.yaml"
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


class TestRunCommand:
    """coop-sim run"""

    def test_run_bundled_scenario(self, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(app, ["run", "fully_cav", "--duration", "1.0", "--out", str(out), "--trace"])

        assert result.exit_code == 0, result.output
        assert "collisions: 0" in result.output
        assert "Intersection Management" in result.output
        for name in ("trace.jsonl", "messages.trace", "timing_table.txt", "commands.csv", "summary.json"):
            assert (out / name).exists(), name

    def test_seed_override_reaches_trace(self, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(app, ["run", "sensor_faults", "--duration", "0.5", "--seed", "17", "--out", str(out)])

        assert result.exit_code == 0, result.output
        header = json.loads((out / "trace.jsonl").read_text(encoding="utf-8").splitlines()[0])
        assert header["seed"] == 17

    def test_unknown_scenario(self, tmp_path):
        result = runner.invoke(app, ["run", "rush_hour", "--out", str(tmp_path)])

        assert result.exit_code == 1

    def test_collision_exit_code(self, crash_scenario, tmp_path):
        args = ["run", str(crash_scenario), "--out", str(tmp_path / "out")]

        assert runner.invoke(app, args).exit_code == 0
        result = runner.invoke(app, args + ["--fail-on-collision"])
        assert result.exit_code == COLLISION_EXIT_CODE
        assert "collisions: 1" in result.output


class TestEvalApCommand:
    """coop-sim eval-ap"""

    def test_identical_logs_score_one(self, tmp_path):
        detections = tmp_path / "detections.log"
        truth = tmp_path / "truth.log"
        detections.write_text(FRAMES, encoding="utf-8")
        truth.write_text(FRAMES, encoding="utf-8")

        result = runner.invoke(app, ["eval-ap", str(detections), str(truth), "--iou", "0.5,0.7"])

        assert result.exit_code == 0, result.output
        assert result.output.splitlines() == ["AP@0.5: 1.0000", "AP@0.7: 1.0000"]

    def test_missing_truth_frame(self, tmp_path):
        detections = tmp_path / "detections.log"
        truth = tmp_path / "truth.log"
        detections.write_text(FRAMES, encoding="utf-8")
        truth.write_text("0.0 0\n", encoding="utf-8")

        assert runner.invoke(app, ["eval-ap", str(detections), str(truth)]).exit_code == 1

    def test_unreported_truth_frame_counts_as_missed(self, tmp_path):
        detections = tmp_path / "detections.log"
        truth = tmp_path / "truth.log"
        detections.write_text("0.0 1\n1.0 2.0 0.0 0.3 0.15 1.0\n", encoding="utf-8")
        truth.write_text(FRAMES, encoding="utf-8")

        result = runner.invoke(app, ["eval-ap", str(detections), str(truth), "--iou", "0.5"])

        assert result.exit_code == 0, result.output
        # one of three truth boxes found, at full precision
        assert "AP@0.5: 0.3333" in result.output.splitlines()

    def test_malformed_log(self, tmp_path):
        detections = tmp_path / "detections.log"
        detections.write_text("0.0 1\n1.0 2.0\n", encoding="utf-8")

        assert runner.invoke(app, ["eval-ap", str(detections), str(detections)]).exit_code == 1

    def test_bad_thresholds(self, tmp_path):
        detections = tmp_path / "detections.log"
        detections.write_text(FRAMES, encoding="utf-8")

        result = runner.invoke(app, ["eval-ap", str(detections), str(detections), "--iou", "half"])
        assert result.exit_code != 0


class TestReplayCommand:
    """coop-sim replay"""

    def test_replay_summary(self, tmp_path):
        out = tmp_path / "out"
        assert runner.invoke(app, ["run", "fully_cav", "--duration", "1.0", "--out", str(out)]).exit_code == 0

        result = runner.invoke(app, ["replay", str(out / "trace.jsonl"), "--summarize"])

        assert result.exit_code == 0, result.output
        summary = json.loads(result.output)
        assert summary["scenario"] == "fully_cav"
        assert summary["ticks"] == 100
        assert summary["collisions"] == []
        recorded = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert recorded["yield_events"] == summary["yield_events"]

    def test_replay_one_liner(self, tmp_path):
        out = tmp_path / "out"
        runner.invoke(app, ["run", "fully_cav", "--duration", "0.2", "--out", str(out)])

        result = runner.invoke(app, ["replay", str(out / "trace.jsonl")])
        assert result.output.strip() == "fully_cav seed=7 ticks=20"

    def test_missing_trace(self, tmp_path):
        assert runner.invoke(app, ["replay", str(tmp_path / "none.jsonl")]).exit_code == 1
