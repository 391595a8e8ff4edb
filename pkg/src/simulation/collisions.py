"""
Collision detection on recorded vehicle footprints.
"""

import math
from typing import Any, Dict, List, Mapping, Sequence, Set, Tuple

import shapely

from ..perception.boxes import box_corners
from .metrics import CollisionEvent

DEFAULT_FOOTPRINT = (0.30, 0.15)


def check_collisions(
    records: Sequence[Dict[str, Any]],
    footprints: Mapping[int, Tuple[float, float]],
) -> List[CollisionEvent]:
    """
    Contacts between actual (uninflated) footprints.

    Every physics tick is checked pairwise. A pair in continuous contact over
    several ticks yields one event, at the first tick of the episode.
    """
    events: List[CollisionEvent] = []
    in_contact: Set[Tuple[int, int]] = set()

    for record in records:
        vehicles = record["vehicles"]
        touching: Set[Tuple[int, int]] = set()
        for i, a in enumerate(vehicles):
            la, wa = footprints.get(a["id"], DEFAULT_FOOTPRINT)
            for b in vehicles[i + 1:]:
                lb, wb = footprints.get(b["id"], DEFAULT_FOOTPRINT)
                reach = 0.5 * (math.hypot(la, wa) + math.hypot(lb, wb))
                if math.hypot(a["x"] - b["x"], a["y"] - b["y"]) > reach:
                    continue
                pa = shapely.Polygon(box_corners(a["x"], a["y"], a["psi"], la, wa))
                pb = shapely.Polygon(box_corners(b["x"], b["y"], b["psi"], lb, wb))
                if pa.intersects(pb):
                    pair = (min(a["id"], b["id"]), max(a["id"], b["id"]))
                    touching.add(pair)
                    if pair not in in_contact:
                        events.append(CollisionEvent(record["tick"], record["t"], pair[0], pair[1]))
        in_contact = touching
    return events
