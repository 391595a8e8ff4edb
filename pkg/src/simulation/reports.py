"""
Report files for a finished run.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..road_map.models import RoadGraph
from ..v2x.trace import MessageTraceWriter
from .engine import SimulationResult
from .metrics import MODULES, TOTAL, Metrics
from .trace import command_table, summarize_trace, write_trace

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.jsonl"
MESSAGE_TRACE_FILE = "messages.trace"
TIMING_FILE = "timing_table.txt"
COMMANDS_FILE = "commands.csv"
COLLISIONS_FILE = "collisions.json"
SUMMARY_FILE = "summary.json"
COMMANDS_PLOT_FILE = "commands.png"
SNAPSHOT_PLOT_FILE = "snapshot.png"


def format_timing_table(metrics: Metrics) -> str:
    """Min/Max/Average in milliseconds per module, then the per-tick total."""
    table = metrics.timing_table()
    lines = [f"{'Module':<26}{'Min':>10}{'Max':>10}{'Average':>10}"]
    for name in MODULES + (TOTAL,):
        stats = table[name]
        if stats is None:
            lines.append(f"{name:<26}{'-':>10}{'-':>10}{'-':>10}")
        else:
            lines.append(f"{name:<26}{stats.min_ms:>10.3f}{stats.max_ms:>10.3f}{stats.mean_ms:>10.3f}")
    return "\n".join(lines) + "\n"


def write_commands_csv(path: Path, records: List[Dict[str, Any]]) -> Path:
    """One row per management tick, one column per CAV; blank when uncommanded."""
    cav_ids, rows = command_table(records)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t"] + [f"cav_{i}" for i in cav_ids])
        for t, commands in rows:
            writer.writerow([t] + [commands.get(i, "") for i in cav_ids])
    return path


def build_summary(result: SimulationResult) -> Dict[str, Any]:
    summary = summarize_trace(result.header, result.records)
    metrics = result.metrics
    summary["travel_times"] = {str(k): v for k, v in sorted(metrics.travel_times.items())}
    summary["timing_ms"] = {
        name: (stats._asdict() if stats is not None else None) for name, stats in metrics.timing_table().items()
    }
    summary["management_mean_ms"] = metrics.management_mean_ms()
    if any(metrics.truth_frames[i].vehicles or metrics.detection_frames[i] for i in range(len(metrics.truth_frames))):
        summary["detection_ap"] = {f"{k:g}": v for k, v in metrics.detection_ap().items()}
    return summary


def emit_reports(
    result: SimulationResult,
    out_dir: Union[str, Path],
    message_trace: bool = False,
    plot: bool = False,
    graph: Optional[RoadGraph] = None,
) -> Dict[str, Path]:
    """
    Write the run's report files.

    Returns:
        Mapping report name -> written path

    Raises:
        OSError: if the output directory cannot be created or written
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}

    written["trace"] = write_trace(out / TRACE_FILE, result.header, result.records)

    if message_trace:
        with MessageTraceWriter(out / MESSAGE_TRACE_FILE) as writer:
            writer.write(result.message_events)
        written["messages"] = out / MESSAGE_TRACE_FILE

    timing_path = out / TIMING_FILE
    timing_path.write_text(format_timing_table(result.metrics), encoding="utf-8")
    written["timing"] = timing_path

    written["commands"] = write_commands_csv(out / COMMANDS_FILE, result.records)

    collisions_path = out / COLLISIONS_FILE
    collisions_path.write_text(
        json.dumps([c._asdict() for c in result.metrics.collision_events], indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    written["collisions"] = collisions_path

    summary_path = out / SUMMARY_FILE
    summary_path.write_text(json.dumps(build_summary(result), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written["summary"] = summary_path

    if plot:
        from ..visualization.plots import plot_commands, plot_snapshot

        written["commands_plot"] = plot_commands(result.records, out / COMMANDS_PLOT_FILE, result.header.get("v_max"))
        if graph is not None and result.decisions:
            v_max = result.header.get("v_max", 0.5)
            decision = next((d for d in result.decisions if d.yielded(v_max)), result.decisions[-1])
            record = next(r for r in result.records if r["t"] == decision.t)
            written["snapshot_plot"] = plot_snapshot(graph, record, out / SNAPSHOT_PLOT_FILE, decision)

    logger.info(f"Reports written to {out}: {', '.join(sorted(written))}")
    return written
