"""
Scenario files: YAML validated with pydantic and resolved against the road map.
"""

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..config import AppConfig
from ..errors import ScenarioError, SimulationError
from ..hv_identification.models import HvThresholds
from ..intersection.models import AgentKind, ConflictMode, ManagerConfig
from ..perception.models import NoiseModel
from ..perception.oracle import FaultPlan, InjectedDetection
from ..road_map.geometry import distance_to_path, pose_at_arclength
from ..road_map.loader import load_map
from ..road_map.models import PathRef, RoadGraph
from ..road_map.routing import path_from_segments, route
from ..v2x.bus import BusConfig
from ..vehicle_dynamics.models import IdmParams, VehicleParams, VehicleState

logger = logging.getLogger(__name__)

SCENARIO_FORMAT_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BusSection(_Strict):
    v2v_range: float = Field(3.0, gt=0, description="V2V range in meters, boundary inclusive")
    publish_rate_hz: float = Field(10.0, gt=0, description="Maximum publication rate per stream")
    latency_ticks: int = Field(0, ge=0, description="Delivery delay in management ticks")
    drop_probability: float = Field(0.0, ge=0, le=1, description="Independent per-message loss")
    v2i_region: str = Field("v2i_coverage", description="Map region gating V2I traffic")


class ManagerSection(_Strict):
    v_max: float = Field(0.5, gt=0)
    dv_step: float = Field(0.1, gt=0)
    horizon: int = Field(30, gt=0, description="Prediction steps")
    dt: float = Field(0.1, gt=0, description="Prediction step in seconds")
    b_safe: float = Field(0.30, gt=0, description="Footprint inflation per side in meters")
    tick_rate_hz: float = Field(10.0, gt=0)
    conflict_mode: ConflictMode = ConflictMode.TIME_ALIGNED


class NoiseSection(_Strict):
    preset: Optional[Literal["perfect", "civat_like"]] = Field(None, description="Base preset")
    sigma_pos: Optional[float] = Field(None, ge=0)
    sigma_psi: Optional[float] = Field(None, ge=0)
    p_fn: Optional[float] = Field(None, ge=0, le=1)
    fp_rate: Optional[float] = Field(None, ge=0)
    fp_region: Optional[str] = Field(None, description="Map region for false positives")
    coverage: str = Field("v2i_coverage", description="Map region the sensor covers")


class ThresholdSection(_Strict):
    tau_cav: float = Field(0.135, gt=0)
    tau_fp: float = Field(0.135, gt=0)
    tau_p: float = Field(0.20, gt=0)
    grace_period: float = Field(0.5, ge=0)


class InjectedSection(_Strict):
    t: float
    x: float
    y: float
    psi: float = 0.0


class FaultSection(_Strict):
    suppress_ids: List[int] = Field(default_factory=list, description="Vehicles the sensor never reports")
    injected: List[InjectedSection] = Field(default_factory=list, description="Forced false positives")


class VehicleSection(_Strict):
    id: int = Field(..., ge=1, description="Unique agent id; 0 is the infrastructure")
    kind: AgentKind
    name: Optional[str] = None
    route: Optional[Tuple[int, int]] = Field(None, description="Start and goal node ids")
    segments: Optional[List[int]] = Field(None, description="Explicit segment sequence")
    spawn_time: float = Field(0.0, ge=0)
    spawn_offset: float = Field(0.0, ge=0, description="Arclength along the path at spawn")
    pose: Optional[Tuple[float, float, float]] = Field(None, description="Explicit spawn pose")
    speed: float = Field(0.5, ge=0, description="Initial speed")
    velocity_profile: List[Tuple[float, float]] = Field(
        default_factory=list, description="HV only: (time since spawn, speed) steps"
    )
    params: Dict[str, float] = Field(default_factory=dict)
    idm: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _one_path_source(self) -> "VehicleSection":
        if (self.route is None) == (self.segments is None):
            raise ValueError(f"vehicle {self.id}: give exactly one of 'route' or 'segments'")
        if self.kind == AgentKind.CAV and self.velocity_profile:
            raise ValueError(f"vehicle {self.id}: velocity_profile applies to HVs only")
        return self


class ScenarioFile(_Strict):
    version: int
    name: str
    map: str = Field("civat_map", description="Bundled map name or a path relative to the file")
    duration: float = Field(..., gt=0)
    seed: int = Field(0, ge=0)
    bus: BusSection = Field(default_factory=BusSection)
    manager: ManagerSection = Field(default_factory=ManagerSection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    thresholds: ThresholdSection = Field(default_factory=ThresholdSection)
    faults: FaultSection = Field(default_factory=FaultSection)
    vehicles: List[VehicleSection] = Field(default_factory=list)

    @model_validator(mode="after")
    def _unique_ids(self) -> "ScenarioFile":
        ids = [v.id for v in self.vehicles]
        if len(ids) != len(set(ids)):
            raise ValueError("vehicle ids must be unique")
        return self


@dataclass(frozen=True)
class VehicleSpec:
    """A vehicle resolved against the map."""
    id: int
    kind: AgentKind
    name: str
    path: PathRef
    spawn_time: float
    spawn_state: VehicleState
    params: VehicleParams
    idm: IdmParams
    velocity_profile: Tuple[Tuple[float, float], ...] = ()

    @property
    def is_cav(self) -> bool:
        return self.kind == AgentKind.CAV

    def scripted_speed(self, elapsed: float) -> float:
        """Piecewise-constant HV speed; before the first step the spawn speed holds."""
        speed = self.spawn_state.v
        for start, v in self.velocity_profile:
            if elapsed + 1e-9 >= start:
                speed = v
        return speed


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs, validated."""
    name: str
    graph: RoadGraph
    duration: float
    seed: int
    bus: BusConfig
    manager: ManagerConfig
    noise: NoiseModel
    coverage_region: str
    thresholds: HvThresholds
    faults: FaultPlan
    vehicles: Tuple[VehicleSpec, ...]
    source: Optional[Path] = None

    def with_seed(self, seed: int) -> "Scenario":
        """Same scenario with every random stream reseeded."""
        return dataclasses.replace(
            self,
            seed=seed,
            bus=dataclasses.replace(self.bus, seed=seed),
            noise=dataclasses.replace(self.noise, seed=seed),
        )

    def with_duration(self, duration: float) -> "Scenario":
        if not duration > 0:
            raise ScenarioError(f"duration must be positive, got {duration}")
        return dataclasses.replace(self, duration=duration)

    @property
    def coverage(self):
        return self.graph.region(self.coverage_region)

    @property
    def footprints(self) -> Dict[int, Tuple[float, float]]:
        return {v.id: v.params.footprint for v in self.vehicles}


def _resolve_map(value: str, base_dir: Optional[Path]) -> Path:
    if value.endswith((".yaml", ".yml")):
        path = Path(value)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return path
    return AppConfig().map_path(value)


def _noise(section: NoiseSection, graph: RoadGraph, seed: int) -> NoiseModel:
    fp_region = graph.region(section.fp_region) if section.fp_region else None
    if section.preset == "civat_like":
        base = NoiseModel.civat_like(fp_region=fp_region, seed=seed)
    else:
        base = NoiseModel(fp_region=fp_region, seed=seed)
    overrides = {
        k: getattr(section, k)
        for k in ("sigma_pos", "sigma_psi", "p_fn", "fp_rate")
        if getattr(section, k) is not None
    }
    return dataclasses.replace(base, **overrides)


def _vehicle(section: VehicleSection, graph: RoadGraph, tau_p: float) -> VehicleSpec:
    try:
        if section.route is not None:
            path = route(graph, section.route[0], section.route[1])
        else:
            path = path_from_segments(graph, section.segments)
    except KeyError as e:
        raise ScenarioError(f"vehicle {section.id}: unknown map element {e}") from None
    if path.length == 0.0:
        raise ScenarioError(f"vehicle {section.id}: route has zero length")

    if section.pose is not None:
        x, y, psi = section.pose
        if distance_to_path((x, y), path) >= tau_p:
            raise ScenarioError(f"vehicle {section.id}: spawn pose is {tau_p} m or more off its path")
    else:
        if section.spawn_offset > path.length:
            raise ScenarioError(f"vehicle {section.id}: spawn_offset beyond the end of its path")
        (x, y), psi = pose_at_arclength(path, section.spawn_offset)

    return VehicleSpec(
        id=section.id,
        kind=section.kind,
        name=section.name or f"{section.kind.value}{section.id}",
        path=path,
        spawn_time=section.spawn_time,
        spawn_state=VehicleState(x=x, y=y, psi=psi, v=section.speed),
        params=VehicleParams(**section.params),
        idm=IdmParams(**section.idm),
        velocity_profile=tuple(sorted(section.velocity_profile)),
    )


def parse_scenario(raw: Any, base_dir: Optional[Path] = None, source: Optional[Path] = None) -> Scenario:
    """Validate a parsed scenario document and resolve it against its map."""
    try:
        doc = ScenarioFile.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError(f"Invalid scenario: {e}") from None
    if doc.version != SCENARIO_FORMAT_VERSION:
        raise ScenarioError(f"Unsupported scenario version {doc.version}")

    graph = load_map(_resolve_map(doc.map, base_dir))
    try:
        thresholds = HvThresholds(**doc.thresholds.model_dump())
        manager = ManagerConfig(**doc.manager.model_dump())
        bus = BusConfig(
            v2v_range=doc.bus.v2v_range,
            v2i_region=graph.region(doc.bus.v2i_region),
            publish_rate_hz=doc.bus.publish_rate_hz,
            latency_ticks=doc.bus.latency_ticks,
            drop_probability=doc.bus.drop_probability,
            seed=doc.seed,
        )
        graph.region(doc.noise.coverage)
        vehicles = tuple(_vehicle(v, graph, thresholds.tau_p) for v in doc.vehicles)
        noise = _noise(doc.noise, graph, doc.seed)
    except ScenarioError:
        raise
    except SimulationError as e:
        raise ScenarioError(str(e)) from e

    faults = FaultPlan(
        suppress_ids=frozenset(doc.faults.suppress_ids),
        injected=tuple(InjectedDetection(**i.model_dump()) for i in doc.faults.injected),
    )
    return Scenario(
        name=doc.name,
        graph=graph,
        duration=doc.duration,
        seed=doc.seed,
        bus=bus,
        manager=manager,
        noise=noise,
        coverage_region=doc.noise.coverage,
        thresholds=thresholds,
        faults=faults,
        vehicles=vehicles,
        source=source,
    )


def load_scenario(scenario_file: Union[str, Path]) -> Scenario:
    """
    Load a scenario file.

    Raises:
        FileNotFoundError: if the file does not exist
        ScenarioError: for invalid YAML, schema violations or unresolvable routes
    """
    path = Path(scenario_file)
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ScenarioError(f"Scenario {path} is not valid YAML: {e}") from None

    scenario = parse_scenario(raw, base_dir=path.parent, source=path)
    logger.info(f"Loaded scenario '{scenario.name}' with {len(scenario.vehicles)} vehicles from {path}")
    return scenario
