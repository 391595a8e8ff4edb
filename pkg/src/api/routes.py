import logging
from datetime import datetime
from typing import Optional

from fastapi import APIRouter, HTTPException

from .config import ApiConfig
from .models import (
    CollisionData, HealthCheckResponse, RunRequest, RunSummaryResponse, ScenarioListResponse
)
from ..config import AppConfig
from ..errors import SimulationError
from ..road_map.loader import load_map
from ..simulation.engine import run_scenario
from ..simulation.reports import build_summary
from ..simulation.scenario import load_scenario

logger = logging.getLogger(__name__)
router = APIRouter()

# Initialize configuration
app_config = AppConfig()
api_config = ApiConfig()


@router.get("/scenarios", response_model=ScenarioListResponse)
def list_scenarios() -> ScenarioListResponse:
    """List the bundled scenario names."""
    return ScenarioListResponse(scenarios=app_config.bundled_scenarios())


@router.post("/scenarios/{name}/run", response_model=RunSummaryResponse)
def run_bundled_scenario(name: str, request: Optional[RunRequest] = None) -> RunSummaryResponse:
    """
    Run a bundled scenario synchronously and return its summary.

    Args:
        name: Bundled scenario name
        request: Optional seed and duration overrides

    Returns:
        RunSummaryResponse with collisions, yields, travel and timing figures
    """
    if name not in app_config.bundled_scenarios():
        raise HTTPException(status_code=404, detail=f"Scenario '{name}' not found")

    request = request or RunRequest()
    scenario = load_scenario(app_config.scenario_path(name))
    if request.seed is not None:
        scenario = scenario.with_seed(request.seed)
    duration = min(request.duration or scenario.duration, api_config.max_scenario_duration)
    if duration != scenario.duration:
        scenario = scenario.with_duration(duration)

    logger.info(f"Running scenario '{name}' (seed {scenario.seed}, {scenario.duration}s) via API")
    summary = build_summary(run_scenario(scenario, concurrent=api_config.concurrent_runs))

    summary["collisions"] = [
        CollisionData(tick=tick, t=t, a=a, b=b) for tick, t, a, b in summary["collisions"]
    ]
    summary.pop("command_range", None)
    return RunSummaryResponse(**summary)


@router.get("/health", response_model=HealthCheckResponse)
def health_check() -> HealthCheckResponse:
    """
    Health check endpoint to verify service status.

    Returns:
        HealthCheckResponse with service status
    """
    services = {}
    overall_status = "healthy"

    # Check the default map parses
    try:
        load_map(app_config.map_path(app_config.default_map))
        services["map"] = "healthy"
    except (SimulationError, FileNotFoundError) as e:
        services["map"] = f"unhealthy: {str(e)}"
        overall_status = "unhealthy"

    # Check bundled scenarios are present
    if app_config.bundled_scenarios():
        services["scenarios"] = "healthy"
    else:
        services["scenarios"] = "unhealthy: no bundled scenarios"
        overall_status = "degraded"

    return HealthCheckResponse(status=overall_status, timestamp=datetime.now(), services=services)
