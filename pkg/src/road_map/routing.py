"""
Global routing and HV candidate-path enumeration over the road graph.
"""

import heapq
import logging
from typing import List, Optional, Tuple

from ..errors import NoPathError, SimulationError
from .geometry import distance_to_path
from .models import PathRef, Point, RoadGraph, Segment, SegmentKind

logger = logging.getLogger(__name__)

# Route costs are compared at this precision; ties fall to the lexicographically smaller segment sequence
COST_DECIMALS = 9
MAX_CANDIDATE_SEGMENTS = 8


def path_from_segments(graph: RoadGraph, segment_ids: List[int]) -> PathRef:
    """Build a PathRef from consecutive segment ids."""
    segments = [graph.segments[seg_id] for seg_id in segment_ids]
    for previous, segment in zip(segments, segments[1:]):
        if previous.to_node != segment.from_node:
            raise SimulationError(f"Segment {segment.id} does not continue segment {previous.id}")
    return PathRef.from_segments(segments)


def shortest_path(graph: RoadGraph, start: int, goal: int) -> PathRef:
    """
    Minimum-arclength route between two nodes.

    Dijkstra over segment lengths. Among equal-cost routes the lexicographically
    smaller segment-id sequence wins, which keeps routes reproducible.

    Args:
        graph: Loaded road graph
        start: Start node id
        goal: Goal node id

    Returns:
        PathRef of the route; an empty path at the node when start == goal

    Raises:
        NoPathError: if the goal cannot be reached
    """
    for node_id in (start, goal):
        if node_id not in graph.nodes:
            raise SimulationError(f"Unknown node id {node_id}")
    if start == goal:
        return PathRef.at_point(graph.node_position(start))

    heap: List[Tuple[float, Tuple[int, ...], int, float]] = [(0.0, (), start, 0.0)]
    settled = set()
    while heap:
        _, seg_ids, node, cost = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == goal:
            logger.debug(f"Route {start} -> {goal}: segments {seg_ids}, {cost:.3f} m")
            return path_from_segments(graph, list(seg_ids))
        for segment in graph.out_segments(node):
            if segment.to_node in settled:
                continue
            new_cost = cost + segment.length
            heapq.heappush(
                heap,
                (round(new_cost, COST_DECIMALS), seg_ids + (segment.id,), segment.to_node, new_cost),
            )

    raise NoPathError(f"Node {goal} is not reachable from node {start}")


def _crossing_routes(graph: RoadGraph, node_id: int) -> List[List[int]]:
    """Segment sequences from a node through one connector to the end of its departure lane."""
    routes: List[List[int]] = []

    def walk(node: int, seg_ids: List[int], visited: set, crossed: bool) -> None:
        if len(seg_ids) > MAX_CANDIDATE_SEGMENTS:
            return
        for segment in graph.out_segments(node):
            if segment.to_node in visited:
                continue
            if segment.kind == SegmentKind.CONNECTOR and crossed:
                continue
            now_crossed = crossed or segment.kind == SegmentKind.CONNECTOR
            extended = seg_ids + [segment.id]
            if now_crossed and segment.kind == SegmentKind.DEPARTURE:
                routes.append(extended)
                continue
            walk(segment.to_node, extended, visited | {segment.to_node}, now_crossed)

    walk(node_id, [], {node_id}, False)
    return routes


def _closest_incoming(graph: RoadGraph, node_id: int, position: Point) -> Optional[Segment]:
    best: Optional[Segment] = None
    best_distance = float("inf")
    for segment in graph.in_segments(node_id):
        d = distance_to_path(position, PathRef.from_segments([segment]))
        if d < best_distance:
            best, best_distance = segment, d
    return best


def candidate_paths_from_entry(graph: RoadGraph, position: Point, tau_p: float) -> List[PathRef]:
    """
    Route hypotheses for a vehicle seen at ``position``.

    Finds the nearest node, enumerates every route from it through the
    intersection to a departure end, and drops routes farther than ``tau_p``
    from the position. Each route is prefixed with the node's closest incoming
    segment so a vehicle still upstream of the node is measured against the
    lane it is driving on.
    """
    node_id = graph.nearest_node(position)
    prefix = _closest_incoming(graph, node_id, position)

    candidates: List[PathRef] = []
    for seg_ids in _crossing_routes(graph, node_id):
        if prefix is not None and prefix.id not in seg_ids:
            seg_ids = [prefix.id] + seg_ids
        path = path_from_segments(graph, seg_ids)
        if distance_to_path(position, path) <= tau_p:
            candidates.append(path)
    return candidates


def route(graph: RoadGraph, start: int, goal: int) -> PathRef:
    """Global route for a vehicle; :func:`shortest_path` with the result logged."""
    path = shortest_path(graph, start, goal)
    logger.info(f"Route {start} -> {goal}: segments {list(path.segment_ids)} ({path.length:.2f} m)")
    return path


def trim_path(graph: RoadGraph, path: PathRef, s: float) -> PathRef:
    """Drop the segments a vehicle at arclength ``s`` has fully passed."""
    if len(path.segment_ids) <= 1:
        return path
    starts = path.segment_start_arclengths(graph)
    first = 0
    for k, start in enumerate(starts):
        if start <= s:
            first = k
    if first == 0:
        return path
    return path_from_segments(graph, list(path.segment_ids[first:]))
