"""
Constant-velocity trajectory prediction along an intended path.
"""

from typing import List, Tuple

import numpy as np

from ..road_map.geometry import poses_at_arclengths, project_onto_path
from ..road_map.models import PathRef, Point
from .models import VehicleState


def predict_arclengths(s0: float, v_const: float, H: int, dt: float, path_length: float) -> np.ndarray:
    """Arclength at each of the H steps, holding at the path end."""
    return np.minimum(s0 + v_const * dt * np.arange(H), path_length)


def predict_poses(state: VehicleState, path: PathRef, v_const: float, H: int, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`predict_trajectory`: (H x 2 positions, H headings)."""
    if H < 1:
        raise ValueError(f"Horizon must be at least one step, got {H}")
    if v_const < 0:
        raise ValueError(f"Prediction speed must be non-negative, got {v_const}")
    s0, _ = project_onto_path(state.position, path)
    return poses_at_arclengths(path, predict_arclengths(s0, v_const, H, dt, path.length))


def predict_trajectory(
    state: VehicleState, path: PathRef, v_const: float, H: int, dt: float
) -> List[Tuple[Point, float]]:
    """
    Predict H future poses at constant speed along the path.

    The state is projected onto the path; step k sits at arclength
    ``s0 + k * v_const * dt`` (step 0 is the projected current pose). Poses
    past the end of the path hold the final pose.
    """
    points, headings = predict_poses(state, path, v_const, H, dt)
    return [((float(p[0]), float(p[1])), float(h)) for p, h in zip(points, headings)]
