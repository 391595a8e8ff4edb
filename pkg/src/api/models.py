from typing import Dict, List, Optional
from pydantic import BaseModel, Field
from datetime import datetime


class RunRequest(BaseModel):
    """Optional overrides for a scenario run."""
    seed: Optional[int] = Field(None, description="Override the scenario seed")
    duration: Optional[float] = Field(None, gt=0, description="Override the simulated duration (s)")


class CollisionData(BaseModel):
    """First tick of a contact episode between two vehicles."""
    tick: int = Field(..., description="Physics tick of first contact")
    t: float = Field(..., description="Simulation time (s)")
    a: int = Field(..., description="Lower vehicle id")
    b: int = Field(..., description="Higher vehicle id")


class TimingData(BaseModel):
    """Computation time of one module in milliseconds."""
    min_ms: float = Field(..., description="Minimum")
    max_ms: float = Field(..., description="Maximum")
    mean_ms: float = Field(..., description="Average")


class RunSummaryResponse(BaseModel):
    """Summary of a finished scenario run."""
    scenario: str = Field(..., description="Scenario name")
    seed: int = Field(..., description="Seed used for the run")
    duration: float = Field(..., description="Simulated time (s)")
    ticks: int = Field(..., description="Physics ticks run")
    management_ticks: int = Field(..., description="Management ticks run")
    vehicles: List[int] = Field(default_factory=list, description="Vehicles that appeared")
    commanded_cavs: List[int] = Field(default_factory=list, description="CAVs that received a command")
    yield_events: int = Field(..., description="Commands below the maximum velocity")
    floor_cases: int = Field(..., description="Conflicts left unresolved at velocity 0")
    collisions: List[CollisionData] = Field(default_factory=list, description="Collision events")
    travel_times: Dict[str, float] = Field(default_factory=dict, description="Travel time per arrived vehicle (s)")
    timing_ms: Dict[str, Optional[TimingData]] = Field(default_factory=dict, description="Per-module timing")
    management_mean_ms: Optional[float] = Field(None, description="Mean identification plus management time")
    detection_ap: Optional[Dict[str, float]] = Field(None, description="Detection AP per IoU threshold")


class ScenarioListResponse(BaseModel):
    """Bundled scenarios."""
    scenarios: List[str] = Field(default_factory=list, description="Scenario names")


class ErrorResponse(BaseModel):
    """Standard error response model."""
    error: str = Field(..., description="Error type")
    message: str = Field(..., description="Error message")
    detail: Optional[str] = Field(None, description="Additional error details")


class HealthCheckResponse(BaseModel):
    """Health check response model."""
    status: str = Field(..., description="Service status")
    timestamp: datetime = Field(..., description="Check timestamp")
    services: Dict[str, str] = Field(..., description="Individual service statuses")
