"""
Oriented box geometry: corner conversion and IoU.
"""

import math
from typing import Tuple

import numpy as np
from shapely.geometry import Polygon

from ..errors import DegenerateBoxError
from ..vehicle_dynamics.bicycle import wrap_angle
from .models import Detection

SIDE_TOLERANCE = 0.05


def box_corners(x: float, y: float, psi: float, length: float, width: float) -> np.ndarray:
    """
    Corners of an oriented rectangle, counter-clockwise from the front-left.

    The first edge runs along the long side from front to rear.
    """
    c, s = math.cos(psi), math.sin(psi)
    half = np.array([
        [length / 2, width / 2],
        [-length / 2, width / 2],
        [-length / 2, -width / 2],
        [length / 2, -width / 2],
    ])
    rotation = np.array([[c, -s], [s, c]])
    return half @ rotation.T + np.array([x, y])


def corners_to_pose(corners) -> Tuple[float, float, float, float, float]:
    """
    Convert four ordered rectangle corners to (x, y, psi, length, width).

    The center is the corner mean and length >= width. The heading follows the
    first long edge in corner order, pointing from its second corner to its
    first, so corners from :func:`box_corners` reproduce the generating heading.

    Raises:
        DegenerateBoxError: for zero-area input or sides deviating more than 5%
    """
    c = np.asarray(corners, dtype=float).reshape(4, 2)
    edges = np.roll(c, -1, axis=0) - c
    sides = np.hypot(edges[:, 0], edges[:, 1])
    if sides.min() < 1e-9:
        raise DegenerateBoxError("Corner set has zero-length sides")
    for a, b in ((0, 2), (1, 3)):
        if abs(sides[a] - sides[b]) > SIDE_TOLERANCE * max(sides[a], sides[b]):
            raise DegenerateBoxError(f"Opposite sides differ: {sides[a]:.4f} vs {sides[b]:.4f}")

    first = (sides[0] + sides[2]) / 2
    second = (sides[1] + sides[3]) / 2
    long_edge = 0 if first >= second else 1
    direction = c[long_edge] - c[long_edge + 1]
    center = c.mean(axis=0)
    return (
        float(center[0]),
        float(center[1]),
        wrap_angle(math.atan2(direction[1], direction[0])),
        float(max(first, second)),
        float(min(first, second)),
    )


def box_polygon(box: Detection) -> Polygon:
    return Polygon(box_corners(box.x_hat, box.y_hat, box.psi_hat, box.length, box.width))


def oriented_iou(a: Detection, b: Detection) -> float:
    """Exact intersection over union of two oriented boxes."""
    if (a.x_hat, a.y_hat, a.psi_hat, a.length, a.width) == (b.x_hat, b.y_hat, b.psi_hat, b.length, b.width):
        return 1.0
    pa, pb = box_polygon(a), box_polygon(b)
    if not pa.intersects(pb):
        return 0.0
    inter = pa.intersection(pb).area
    union = pa.area + pb.area - inter
    if union <= 0.0:
        return 0.0
    return float(min(max(inter / union, 0.0), 1.0))
