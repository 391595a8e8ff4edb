"""
Detection, noise-model and ground-truth types for the infrastructure sensor.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from ..errors import SimulationError
from ..road_map.models import Point, Region
from ..vehicle_dynamics.models import VehicleState

DEFAULT_BOX = (0.30, 0.15)


@dataclass(frozen=True)
class Detection:
    """A 2D oriented box reported by the sensor at time ``t``."""
    x_hat: float
    y_hat: float
    psi_hat: float
    length: float
    width: float
    t: float
    score: float = 1.0
    source_id: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x_hat, self.y_hat, self.psi_hat, self.t)):
            raise SimulationError(f"Detection has non-finite pose: {self}")
        if not (self.length > 0 and self.width > 0):
            raise SimulationError(f"Detection box must have positive size: {self.length} x {self.width}")

    @property
    def position(self) -> Point:
        return (self.x_hat, self.y_hat)

    @property
    def pose(self) -> Tuple[float, float, float]:
        return (self.x_hat, self.y_hat, self.psi_hat)


@dataclass(frozen=True)
class NoiseModel:
    """
    Failure modes of the detection oracle.

    Position noise is per-axis Gaussian, heading noise Gaussian, misses are
    Bernoulli per true object and false positives Poisson per frame, placed
    uniformly in ``fp_region`` (the coverage region when unset).
    """
    sigma_pos: float = 0.0
    sigma_psi: float = 0.0
    p_fn: float = 0.0
    fp_rate: float = 0.0
    fp_region: Optional[Region] = None
    seed: int = 0
    fp_box: Tuple[float, float] = DEFAULT_BOX

    def __post_init__(self) -> None:
        if self.sigma_pos < 0 or self.sigma_psi < 0:
            raise SimulationError("Noise sigmas must be non-negative")
        if not 0.0 <= self.p_fn <= 1.0:
            raise SimulationError(f"p_fn must be a probability, got {self.p_fn}")
        if self.fp_rate < 0:
            raise SimulationError(f"fp_rate must be non-negative, got {self.fp_rate}")

    @classmethod
    def perfect(cls, seed: int = 0) -> "NoiseModel":
        return cls(seed=seed)

    @classmethod
    def civat_like(cls, fp_region: Optional[Region] = None, seed: int = 0) -> "NoiseModel":
        """Calibration preset: 2 cm position noise, 3 degree heading noise, 2% misses, 0.05 FP/frame."""
        return cls(
            sigma_pos=0.02,
            sigma_psi=math.radians(3.0),
            p_fn=0.02,
            fp_rate=0.05,
            fp_region=fp_region,
            seed=seed,
        )


@dataclass(frozen=True)
class TruthVehicle:
    id: int
    state: VehicleState
    length: float
    width: float
    is_cav: bool


@dataclass(frozen=True)
class GroundTruthFrame:
    """Exact poses of every vehicle in the world at time ``t``."""
    t: float
    vehicles: Tuple[TruthVehicle, ...]

    def __post_init__(self) -> None:
        ids = [v.id for v in self.vehicles]
        if len(ids) != len(set(ids)):
            raise SimulationError(f"Duplicate vehicle ids in ground-truth frame at t={self.t}")

    @classmethod
    def from_detections(cls, t: float, boxes: Sequence[Detection]) -> "GroundTruthFrame":
        """Truth frame from boxes read out of a truth log."""
        return cls(
            t=t,
            vehicles=tuple(
                TruthVehicle(
                    id=i,
                    state=VehicleState(x=b.x_hat, y=b.y_hat, psi=b.psi_hat, v=0.0),
                    length=b.length,
                    width=b.width,
                    is_cav=False,
                )
                for i, b in enumerate(boxes)
            ),
        )


@dataclass(frozen=True)
class DetectionFrame:
    """All detections of one sensing instant."""
    t: float
    detections: Tuple[Detection, ...]

    def __iter__(self):
        return iter(self.detections)

    def __len__(self) -> int:
        return len(self.detections)
