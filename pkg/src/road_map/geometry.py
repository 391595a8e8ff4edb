"""
Geometric queries on paths and regions.
"""

from typing import Optional, Sequence, Tuple

import numpy as np
import shapely

from ..errors import ArclengthOutOfRangeError
from .models import PathRef, Point, Region

ARCLENGTH_TOLERANCE = 1e-9


def _closest_on_segments(position: Point, polyline: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-segment clamped projection parameter and distance for a point."""
    a = polyline[:-1]
    ab = polyline[1:] - a
    ap = np.asarray(position, dtype=float) - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", ap, ab) / denom, 0.0, 1.0)
    closest = a + ab * t[:, None]
    d = np.hypot(position[0] - closest[:, 0], position[1] - closest[:, 1])
    return t, d


def distance_to_path(position: Point, path: PathRef) -> float:
    """
    Minimum Euclidean distance from a point to the path polyline.

    Args:
        position: Query point in meters
        path: Non-empty path

    Returns:
        Point-to-segment distance in meters
    """
    polyline = path.polyline
    if len(polyline) == 1:
        return float(np.hypot(position[0] - polyline[0, 0], position[1] - polyline[0, 1]))
    _, d = _closest_on_segments(position, polyline)
    return float(d.min())


def project_onto_path(
    position: Point,
    path: PathRef,
    s_hint: Optional[float] = None,
    behind: float = 0.5,
    ahead: float = 1.5,
) -> Tuple[float, float]:
    """
    Arclength of the closest point on the path and the distance to it.

    With ``s_hint`` the search is restricted to ``[s_hint - behind, s_hint + ahead]``
    so a vehicle keeps its progress on paths that pass near themselves.
    """
    polyline = path.polyline
    cum = path.cumulative_arclength
    if len(polyline) == 1:
        return 0.0, float(np.hypot(position[0] - polyline[0, 0], position[1] - polyline[0, 1]))

    lo, hi = 0, len(polyline) - 1
    if s_hint is not None:
        lo = max(0, int(np.searchsorted(cum, s_hint - behind, side="right")) - 1)
        hi = min(len(polyline) - 1, int(np.searchsorted(cum, s_hint + ahead, side="left")) + 1)
        hi = max(hi, lo + 1)

    t, d = _closest_on_segments(position, polyline[lo:hi + 1])
    i = int(np.argmin(d))
    seg_len = cum[lo + i + 1] - cum[lo + i]
    return float(cum[lo + i] + t[i] * seg_len), float(d[i])


def poses_at_arclengths(path: PathRef, s: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized pose lookup; arclengths are clamped to the path."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, path.length)
    polyline = path.polyline
    if len(polyline) == 1:
        return np.repeat(polyline, len(s), axis=0), np.zeros(len(s))

    cum = path.cumulative_arclength
    x = np.interp(s, cum, polyline[:, 0])
    y = np.interp(s, cum, polyline[:, 1])
    # a waypoint shared by two polyline segments takes the following segment's heading
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(polyline) - 2)
    return np.column_stack([x, y]), path.segment_headings[idx]


def pose_at_arclength(path: PathRef, s: float) -> Tuple[Point, float]:
    """
    Position and heading at arclength ``s`` along the path.

    Raises:
        ArclengthOutOfRangeError: if ``s`` lies outside ``[0, path.length]``
    """
    if s < -ARCLENGTH_TOLERANCE or s > path.length + ARCLENGTH_TOLERANCE:
        raise ArclengthOutOfRangeError(
            f"Arclength {s:.6f} outside path of length {path.length:.6f}"
        )
    points, headings = poses_at_arclengths(path, [s])
    return (float(points[0, 0]), float(points[0, 1])), float(headings[0])


def in_region(position: Point, region: Region) -> bool:
    """Point-in-polygon test; points on the boundary count as inside."""
    return bool(shapely.intersects_xy(region.shape, position[0], position[1]))
