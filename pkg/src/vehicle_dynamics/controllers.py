"""
Lateral (pure pursuit) and longitudinal (IDM) controllers.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol, Tuple

import numpy as np

from ..road_map.geometry import pose_at_arclength, project_onto_path
from ..road_map.models import PathRef
from .models import IdmParams, VehicleParams, VehicleState

DEFAULT_LOOKAHEAD = 0.3
LEADER_LATERAL_TOLERANCE = 0.15
NO_LEADER_GAP = math.inf


@dataclass(frozen=True)
class SteeringCommand:
    delta: float
    end_of_path: bool
    arclength: float


class PositionedVehicle(Protocol):
    """Anything reporting a planar position and speed, such as a V2V message."""
    x: float
    y: float
    v: float


def _lookahead_target(
    position: np.ndarray, path: PathRef, s: float, lookahead: float
) -> Tuple[np.ndarray, bool]:
    """Point on the path ahead of ``s`` at distance ``lookahead`` from the vehicle."""
    polyline = path.polyline
    cum = path.cumulative_arclength
    anchor = np.asarray(pose_at_arclength(path, s)[0])
    if np.hypot(*(anchor - position)) >= lookahead:
        return anchor, False

    first_ahead = int(np.searchsorted(cum, s, side="right"))
    ahead = polyline[first_ahead:]
    if len(ahead) == 0:
        return polyline[-1], True

    d = np.hypot(ahead[:, 0] - position[0], ahead[:, 1] - position[1])
    beyond = np.nonzero(d >= lookahead)[0]
    if len(beyond) == 0:
        return polyline[-1], True

    j = int(beyond[0])
    a = anchor if j == 0 else ahead[j - 1]
    b = ahead[j]
    ab = b - a
    ap = a - position
    qa = float(ab @ ab)
    qb = 2.0 * float(ap @ ab)
    qc = float(ap @ ap) - lookahead * lookahead
    t = (-qb + math.sqrt(max(qb * qb - 4.0 * qa * qc, 0.0))) / (2.0 * qa)
    return a + min(max(t, 0.0), 1.0) * ab, False


def pure_pursuit_steer(
    state: VehicleState,
    path: PathRef,
    lookahead: float,
    params: VehicleParams,
    s_hint: Optional[float] = None,
) -> SteeringCommand:
    """
    Pure pursuit steering toward the path point ``lookahead`` meters away.

    delta = atan(2 L sin(eta) / lookahead), eta being the bearing of the target
    relative to the heading; positive delta turns left. Near the path end the
    final waypoint is tracked at its actual distance.

    Returns:
        SteeringCommand with the clamped angle, the end-of-path flag and the
        arclength the vehicle projects to
    """
    position = np.array([state.x, state.y])
    s, _ = project_onto_path(state.position, path, s_hint)

    if path.length == 0.0:
        return SteeringCommand(0.0, True, 0.0)
    if s >= path.length - 1e-9:
        end_heading = path.segment_headings[-1]
        past = (position - path.polyline[-1]) @ np.array([math.cos(end_heading), math.sin(end_heading)])
        if past >= 0.0:
            return SteeringCommand(0.0, True, s)

    target, at_end = _lookahead_target(position, path, s, lookahead)
    distance = float(np.hypot(*(target - position)))
    if distance < 1e-9:
        return SteeringCommand(0.0, True, s)

    eta = math.atan2(target[1] - state.y, target[0] - state.x) - state.psi
    delta = math.atan(2.0 * params.wheelbase * math.sin(eta) / distance)
    delta = min(max(delta, -params.delta_max), params.delta_max)
    return SteeringCommand(delta, False, s)


def idm_velocity(ego_v: float, gap: float, leader_v: float, p: IdmParams, dt: float) -> float:
    """
    Next reference speed from the Intelligent Driver Model.

    a = a_max [1 - (v/v0)^exp - (s*/gap)^2],  s* = s0 + v T + v dv / (2 sqrt(a_max b))

    Args:
        ego_v: Current ego speed
        gap: Bumper-to-bumper gap to the leader, ``math.inf`` without one
        leader_v: Leader speed (ignored without a leader)
        p: IDM parameters
        dt: Planning step in seconds

    Returns:
        ego_v + a dt clamped to [0, desired_speed]
    """
    if gap <= 0.0:
        return 0.0
    free_term = (ego_v / p.desired_speed) ** p.exponent
    interaction = 0.0
    if math.isfinite(gap):
        s_star = (
            p.min_gap
            + ego_v * p.time_headway
            + ego_v * (ego_v - leader_v) / (2.0 * math.sqrt(p.max_accel * p.comfort_decel))
        )
        interaction = (s_star / gap) ** 2
    accel = p.max_accel * (1.0 - free_term - interaction)
    return min(max(ego_v + accel * dt, 0.0), p.desired_speed)


def find_leader(
    ego_s: float,
    path: PathRef,
    neighbors: Iterable[PositionedVehicle],
    params: VehicleParams,
    lateral_tolerance: float = LEADER_LATERAL_TOLERANCE,
    search_range: float = 3.5,
) -> Tuple[float, float]:
    """
    Closest vehicle ahead on the ego path.

    A neighbor counts when it projects onto the path within ``lateral_tolerance``
    and ahead of ``ego_s``. The gap is the arclength difference less one
    vehicle length.

    Returns:
        (gap, leader speed), or (inf, 0.0) when the lane ahead is clear
    """
    best_gap, best_v = NO_LEADER_GAP, 0.0
    for other in neighbors:
        s_other, lateral = project_onto_path((other.x, other.y), path, ego_s, behind=0.0, ahead=search_range)
        if lateral > lateral_tolerance or s_other <= ego_s:
            continue
        gap = s_other - ego_s - params.length
        if gap < best_gap:
            best_gap, best_v = gap, other.v
    return best_gap, best_v
