"""
Road network types: nodes, waypointed segments, named regions and routed paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import shapely
from shapely.geometry import Polygon

from ..errors import SimulationError

Point = Tuple[float, float]

JOIN_TOLERANCE = 0.01


class SegmentKind(str, Enum):
    """Role of a segment in the map."""
    APPROACH = "approach"
    CONNECTOR = "connector"
    DEPARTURE = "departure"
    BELTWAY = "beltway"


@dataclass(frozen=True)
class Node:
    id: int
    position: Point


@dataclass(frozen=True, eq=False)
class Segment:
    """Directed edge of the road graph with its stored waypoints."""
    id: int
    from_node: int
    to_node: int
    waypoints: np.ndarray
    kind: SegmentKind = SegmentKind.APPROACH

    @cached_property
    def length(self) -> float:
        steps = np.diff(self.waypoints, axis=0)
        return float(np.hypot(steps[:, 0], steps[:, 1]).sum())


@dataclass(frozen=True, eq=False)
class Region:
    """Named polygon such as the intersection or the V2I coverage area."""
    name: str
    polygon: Tuple[Point, ...]

    @cached_property
    def shape(self) -> Polygon:
        shape = Polygon(self.polygon)
        shapely.prepare(shape)
        return shape

    @property
    def centroid(self) -> Point:
        c = self.shape.centroid
        return (c.x, c.y)


@dataclass(frozen=True, eq=False)
class PathRef:
    """Route as an ordered segment list with its concatenated polyline."""
    segment_ids: Tuple[int, ...]
    polyline: np.ndarray
    cumulative_arclength: np.ndarray

    @classmethod
    def from_segments(cls, segments: Sequence[Segment]) -> "PathRef":
        """Concatenate segment waypoints, merging the shared point at each join."""
        if not segments:
            raise SimulationError("A path needs at least one segment")

        chunks: List[np.ndarray] = [segments[0].waypoints]
        for previous, segment in zip(segments, segments[1:]):
            gap = float(np.hypot(*(segment.waypoints[0] - previous.waypoints[-1])))
            if gap >= JOIN_TOLERANCE:
                raise SimulationError(
                    f"Segments {previous.id} and {segment.id} are not continuous (gap {gap:.4f} m)"
                )
            chunks.append(segment.waypoints[1:])

        polyline = np.vstack(chunks)
        return cls(
            segment_ids=tuple(s.id for s in segments),
            polyline=polyline,
            cumulative_arclength=_cumulative(polyline),
        )

    @classmethod
    def from_points(cls, points: Iterable[Point], segment_ids: Tuple[int, ...] = ()) -> "PathRef":
        polyline = np.asarray(list(points), dtype=float).reshape(-1, 2)
        return cls(segment_ids=segment_ids, polyline=polyline, cumulative_arclength=_cumulative(polyline))

    @classmethod
    def at_point(cls, point: Point) -> "PathRef":
        """Zero-length path sitting on a single node."""
        return cls.from_points([point])

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    @property
    def is_empty(self) -> bool:
        return len(self.segment_ids) == 0

    @cached_property
    def segment_headings(self) -> np.ndarray:
        steps = np.diff(self.polyline, axis=0)
        return np.arctan2(steps[:, 1], steps[:, 0])

    def segment_start_arclengths(self, graph: "RoadGraph") -> List[float]:
        """Arclength at which each listed segment begins along this path."""
        starts: List[float] = []
        s = 0.0
        for seg_id in self.segment_ids:
            starts.append(s)
            s += graph.segments[seg_id].length
        return starts

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PathRef):
            return NotImplemented
        return self.segment_ids == other.segment_ids and np.array_equal(self.polyline, other.polyline)

    def __hash__(self) -> int:
        return hash((self.segment_ids, self.polyline.shape))

    def __repr__(self) -> str:
        return f"PathRef(segments={list(self.segment_ids)}, length={self.length:.3f})"


def _cumulative(polyline: np.ndarray) -> np.ndarray:
    steps = np.diff(polyline, axis=0)
    return np.concatenate([[0.0], np.cumsum(np.hypot(steps[:, 0], steps[:, 1]))])


@dataclass(eq=False)
class RoadGraph:
    """
    Directed road network. Treated as immutable once loaded.

    The segment topology is mirrored into a networkx MultiDiGraph keyed by
    segment id so connectivity and path enumeration use the library directly.
    """
    nodes: Dict[int, Node]
    segments: Dict[int, Segment]
    regions: Dict[str, Region]
    extent: Optional[Tuple[float, float]] = None
    name: str = "map"
    graph: nx.MultiDiGraph = field(init=False, repr=False)

    def __post_init__(self) -> None:
        graph = nx.MultiDiGraph()
        for node in self.nodes.values():
            graph.add_node(node.id, position=node.position)
        for segment in self.segments.values():
            graph.add_edge(
                segment.from_node,
                segment.to_node,
                key=segment.id,
                weight=segment.length,
                kind=segment.kind.value,
            )
        self.graph = graph
        self._node_ids = np.array(sorted(self.nodes), dtype=int)
        self._node_xy = np.array([self.nodes[i].position for i in self._node_ids], dtype=float)

    def node_position(self, node_id: int) -> Point:
        return self.nodes[node_id].position

    def out_segments(self, node_id: int) -> List[Segment]:
        """Outgoing segments of a node, ascending by id."""
        keys = sorted(key for _, _, key in self.graph.out_edges(node_id, keys=True))
        return [self.segments[k] for k in keys]

    def in_segments(self, node_id: int) -> List[Segment]:
        """Incoming segments of a node, ascending by id."""
        keys = sorted(key for _, _, key in self.graph.in_edges(node_id, keys=True))
        return [self.segments[k] for k in keys]

    def nearest_node(self, position: Point) -> int:
        """Id of the closest node; ties go to the lower id."""
        d = np.hypot(self._node_xy[:, 0] - position[0], self._node_xy[:, 1] - position[1])
        return int(self._node_ids[int(np.argmin(d))])

    def region(self, name: str) -> Region:
        try:
            return self.regions[name]
        except KeyError:
            raise SimulationError(f"Map '{self.name}' has no region named '{name}'") from None

    def segments_of_kind(self, kind: SegmentKind) -> List[Segment]:
        return [self.segments[k] for k in sorted(self.segments) if self.segments[k].kind == kind]

    @cached_property
    def entry_lanes(self) -> List[PathRef]:
        """Approach segments as single-segment paths."""
        return [PathRef.from_segments([s]) for s in self.segments_of_kind(SegmentKind.APPROACH)]

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        points = np.vstack([s.waypoints for s in self.segments.values()] + [self._node_xy])
        return (
            float(points[:, 0].min()),
            float(points[:, 1].min()),
            float(points[:, 0].max()),
            float(points[:, 1].max()),
        )


def is_finite_point(point: Sequence[float]) -> bool:
    return len(point) == 2 and all(math.isfinite(float(v)) for v in point)
