"""
Parametric detection oracle standing in for the infrastructure LiDAR detector.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Tuple

import numpy as np

from ..road_map.geometry import in_region
from ..road_map.models import Region
from ..vehicle_dynamics.bicycle import wrap_angle
from .models import Detection, GroundTruthFrame, NoiseModel

logger = logging.getLogger(__name__)

NOISE_CLIP_SIGMAS = 6.0
FP_PLACEMENT_ATTEMPTS = 100
TIME_RESOLUTION = 1e6


@dataclass(frozen=True)
class InjectedDetection:
    """A false positive forced into the frame at time ``t``."""
    t: float
    x: float
    y: float
    psi: float = 0.0


@dataclass(frozen=True)
class FaultPlan:
    """Scripted perception faults layered on top of the noise model."""
    suppress_ids: FrozenSet[int] = field(default_factory=frozenset)
    injected: Tuple[InjectedDetection, ...] = ()

    def injected_at(self, t: float) -> List[InjectedDetection]:
        return [d for d in self.injected if abs(d.t - t) < 1e-9]


def frame_rng(seed: int, t: float) -> np.random.Generator:
    """Generator for one sensing instant, independent of call order."""
    return np.random.default_rng([seed, int(round(t * TIME_RESOLUTION))])


def _uniform_in_region(rng: np.random.Generator, region: Region) -> Optional[Tuple[float, float]]:
    min_x, min_y, max_x, max_y = region.shape.bounds
    for _ in range(FP_PLACEMENT_ATTEMPTS):
        point = (float(rng.uniform(min_x, max_x)), float(rng.uniform(min_y, max_y)))
        if in_region(point, region):
            return point
    return None


def sense(
    frame: GroundTruthFrame,
    noise: NoiseModel,
    coverage: Region,
    faults: Optional[FaultPlan] = None,
) -> List[Detection]:
    """
    Simulated detections for one ground-truth frame.

    Every vehicle consumes the same four draws (miss, dx, dy, dpsi) whether or
    not it is detected, so the outcome for one vehicle never depends on another
    vehicle's coverage. Position errors are clipped to 6 sigma per axis and in
    norm; heading errors to 6 sigma.

    Args:
        frame: Ground truth at the sensing instant
        noise: Failure-mode parameters and seed
        coverage: Sensor range; vehicles outside it are never reported
        faults: Optional suppressions and injected false positives

    Returns:
        True-positive detections in vehicle-id order, then false positives
    """
    rng = frame_rng(noise.seed, frame.t)
    suppress = faults.suppress_ids if faults else frozenset()
    detections: List[Detection] = []

    pos_clip = NOISE_CLIP_SIGMAS * noise.sigma_pos
    for vehicle in sorted(frame.vehicles, key=lambda v: v.id):
        miss = rng.random()
        dx, dy, dpsi = rng.standard_normal(3)
        if not in_region(vehicle.state.position, coverage):
            continue
        if miss < noise.p_fn or vehicle.id in suppress:
            continue

        dx = float(np.clip(dx * noise.sigma_pos, -pos_clip, pos_clip))
        dy = float(np.clip(dy * noise.sigma_pos, -pos_clip, pos_clip))
        error = math.hypot(dx, dy)
        if error > pos_clip:
            dx, dy = dx * pos_clip / error, dy * pos_clip / error
            error = pos_clip
        psi_clip = NOISE_CLIP_SIGMAS * noise.sigma_psi
        dpsi = float(np.clip(dpsi * noise.sigma_psi, -psi_clip, psi_clip))

        score = 1.0 if noise.sigma_pos == 0 else max(0.0, 1.0 - error / pos_clip)
        detections.append(
            Detection(
                x_hat=vehicle.state.x + dx,
                y_hat=vehicle.state.y + dy,
                psi_hat=wrap_angle(vehicle.state.psi + dpsi),
                length=vehicle.length,
                width=vehicle.width,
                t=frame.t,
                score=score,
                source_id=vehicle.id,
            )
        )

    fp_region = noise.fp_region or coverage
    n_fp = int(rng.poisson(noise.fp_rate)) if noise.fp_rate > 0 else 0
    for _ in range(n_fp):
        point = _uniform_in_region(rng, fp_region)
        heading = float(rng.uniform(-math.pi, math.pi))
        score = float(rng.random())
        if point is None:
            logger.warning(f"Could not place a false positive inside region '{fp_region.name}'")
            continue
        detections.append(
            Detection(
                x_hat=point[0],
                y_hat=point[1],
                psi_hat=wrap_angle(heading),
                length=noise.fp_box[0],
                width=noise.fp_box[1],
                t=frame.t,
                score=score,
            )
        )

    if faults:
        for injected in faults.injected_at(frame.t):
            detections.append(
                Detection(
                    x_hat=injected.x,
                    y_hat=injected.y,
                    psi_hat=wrap_angle(injected.psi),
                    length=noise.fp_box[0],
                    width=noise.fp_box[1],
                    t=frame.t,
                    score=1.0,
                )
            )
    return detections
