"""
Command-line entry point.

    python -m src.cli run fully_cav --seed 3 --out runs/fully_cav --trace
    python -m src.cli eval-ap detections.log truth.log --iou 0.3,0.5,0.7
    python -m src.cli replay runs/fully_cav/trace.jsonl --summarize
"""

import json
import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer

from .config import AppConfig
from .errors import SimulationError
from .perception.evaluation import evaluate_ap, format_ap
from .perception.log_io import replay_log, truth_frames
from .simulation.engine import run_scenario
from .simulation.reports import emit_reports, format_timing_table
from .simulation.scenario import Scenario, load_scenario
from .simulation.trace import read_trace, summarize_trace

logger = logging.getLogger(__name__)

COLLISION_EXIT_CODE = 2

app = typer.Typer(help="Cooperative intersection simulator", no_args_is_help=True, add_completion=False)


def _configure_logging(config: AppConfig) -> None:
    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def resolve_scenario(value: str, config: AppConfig) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(value)
    if not path.exists() and not value.endswith((".yaml", ".yml")):
        path = config.scenario_path(value)
    return load_scenario(path)


def _parse_thresholds(value: str) -> List[float]:
    try:
        return [float(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated numbers, got {value!r}") from None


@app.command()
def run(
    scenario: Annotated[str, typer.Argument(help="Scenario file or bundled scenario name")],
    seed: Annotated[Optional[int], typer.Option("--seed", help="Override the scenario seed")] = None,
    out: Annotated[Optional[Path], typer.Option("--out", help="Report directory")] = None,
    trace: Annotated[bool, typer.Option("--trace", help="Also write the message trace")] = False,
    fail_on_collision: Annotated[
        bool, typer.Option("--fail-on-collision", help="Exit with code 2 when any collision occurs")
    ] = False,
    plot: Annotated[bool, typer.Option("--plot", help="Write command and snapshot plots")] = False,
    concurrent: Annotated[
        Optional[bool], typer.Option("--concurrent/--sequential", help="Run CAV phases on a thread pool")
    ] = None,
    duration: Annotated[Optional[float], typer.Option("--duration", help="Override the duration (s)")] = None,
):
    """Run a scenario and write its reports."""
    config = AppConfig()
    _configure_logging(config)
    try:
        s = resolve_scenario(scenario, config)
        if seed is not None:
            s = s.with_seed(seed)
        if duration is not None:
            s = s.with_duration(duration)
        result = run_scenario(
            s,
            concurrent=config.concurrent if concurrent is None else concurrent,
            record_messages=trace,
            keep_decisions=plot,
        )
        out_dir = out or config.output_dir / s.name
        emit_reports(result, out_dir, message_trace=trace, plot=plot, graph=s.graph)
    except (SimulationError, FileNotFoundError) as e:
        logger.error(str(e))
        raise typer.Exit(1)

    typer.echo(format_timing_table(result.metrics), nl=False)
    collisions = result.metrics.collision_events
    typer.echo(f"collisions: {len(collisions)}  yield events: {len(result.metrics.yield_events)}  reports: {out_dir}")
    if collisions and fail_on_collision:
        raise typer.Exit(COLLISION_EXIT_CODE)


@app.command("eval-ap")
def eval_ap(
    detections_log: Annotated[Path, typer.Argument(help="Detection log")],
    truth_log: Annotated[Path, typer.Argument(help="Truth log in the same format")],
    iou: Annotated[str, typer.Option("--iou", help="Comma-separated IoU thresholds")] = "0.3,0.5,0.7",
):
    """Score a detection log against a truth log."""
    _configure_logging(AppConfig())
    try:
        detections = replay_log(detections_log)
        truth = truth_frames(replay_log(truth_log))
        by_time = {round(f.t, 6): f for f in truth}
        aligned_detections = [list(f) for f in detections]
        aligned_truth = []
        for frame in detections:
            key = round(frame.t, 6)
            if key not in by_time:
                raise SimulationError(f"No truth frame at t={frame.t}")
            aligned_truth.append(by_time[key])
        # truth frames the detector never reported on count as fully missed
        unreported = sorted(set(by_time) - {round(f.t, 6) for f in detections})
        if unreported:
            logger.warning(f"{len(unreported)} truth frame(s) have no detection frame; scoring them as missed")
        for key in unreported:
            aligned_detections.append([])
            aligned_truth.append(by_time[key])
        results = evaluate_ap(aligned_detections, aligned_truth, _parse_thresholds(iou))
    except (SimulationError, FileNotFoundError) as e:
        logger.error(str(e))
        raise typer.Exit(1)

    for line in format_ap(results):
        typer.echo(line)


@app.command()
def replay(
    trace_file: Annotated[Path, typer.Argument(help="trace.jsonl written by 'run'")],
    summarize: Annotated[bool, typer.Option("--summarize", help="Print a JSON summary")] = False,
):
    """Inspect a recorded trace without re-running it."""
    _configure_logging(AppConfig())
    try:
        header, records = read_trace(trace_file)
    except (SimulationError, FileNotFoundError) as e:
        logger.error(str(e))
        raise typer.Exit(1)

    if summarize:
        typer.echo(json.dumps(summarize_trace(header, records), indent=2, sort_keys=True))
    else:
        typer.echo(f"{header.get('scenario')} seed={header.get('seed')} ticks={len(records)}")


if __name__ == "__main__":
    app()
