"""
Map file loading and validation.

Map files are YAML with a ``version`` header and three sections::

    version: 1
    extent: [6.0, 5.5]
    nodes:    [{id, x, y}, ...]
    segments: [{id, from, to, kind, waypoints: [[x, y], ...]}, ...]
    regions:  [{name, polygon: [[x, y], ...]}, ...]
"""

import logging
from pathlib import Path
from typing import Any, Dict, Union

import networkx as nx
import numpy as np
import yaml
from shapely.geometry import LinearRing, Polygon

from ..errors import MapLoadError
from .models import JOIN_TOLERANCE, Node, Region, RoadGraph, Segment, SegmentKind, is_finite_point

logger = logging.getLogger(__name__)

MAP_FORMAT_VERSION = 1


def load_map(map_file: Union[str, Path]) -> RoadGraph:
    """
    Load and validate a road map.

    Args:
        map_file: Path to the YAML map file

    Returns:
        Validated RoadGraph

    Raises:
        FileNotFoundError: if the file does not exist
        MapLoadError: on parse errors or invariant violations, naming the element
    """
    path = Path(map_file)
    if not path.exists():
        raise FileNotFoundError(f"Map file not found: {path}")

    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise MapLoadError(f"Cannot parse map file {path}: {e}") from e

    graph = parse_map(raw, default_name=path.stem)
    logger.info(
        f"Loaded map '{graph.name}': {len(graph.nodes)} nodes, "
        f"{len(graph.segments)} segments, regions {sorted(graph.regions)}"
    )
    return graph


def parse_map(raw: Any, default_name: str = "map") -> RoadGraph:
    """Validate an already-parsed map document."""
    if not isinstance(raw, dict):
        raise MapLoadError("Map document must be a mapping")
    if raw.get("version") != MAP_FORMAT_VERSION:
        raise MapLoadError(f"Unsupported or missing map version: {raw.get('version')!r}")

    nodes = _parse_nodes(raw.get("nodes") or [])
    segments = _parse_segments(raw.get("segments") or [], nodes)
    regions = _parse_regions(raw.get("regions") or [])

    extent = raw.get("extent")
    if extent is not None:
        extent = (float(extent[0]), float(extent[1]))
        _check_extent(extent, nodes, segments)

    graph = RoadGraph(
        nodes=nodes,
        segments=segments,
        regions=regions,
        extent=extent,
        name=str(raw.get("name", default_name)),
    )
    if segments and not nx.is_weakly_connected(graph.graph):
        raise MapLoadError("Road graph is not connected over its segments")
    return graph


def _parse_nodes(raw_nodes: list) -> Dict[int, Node]:
    if not raw_nodes:
        raise MapLoadError("Map has no nodes")

    nodes: Dict[int, Node] = {}
    for entry in raw_nodes:
        try:
            node_id = int(entry["id"])
            position = (float(entry["x"]), float(entry["y"]))
        except (KeyError, TypeError, ValueError) as e:
            raise MapLoadError(f"Malformed node entry {entry!r}") from e
        if node_id in nodes:
            raise MapLoadError("Duplicate node id", element_id=node_id)
        if not is_finite_point(position):
            raise MapLoadError("Node position is not finite", element_id=node_id)
        nodes[node_id] = Node(id=node_id, position=position)
    return nodes


def _parse_segments(raw_segments: list, nodes: Dict[int, Node]) -> Dict[int, Segment]:
    segments: Dict[int, Segment] = {}
    for entry in raw_segments:
        try:
            seg_id = int(entry["id"])
            from_node = int(entry["from"])
            to_node = int(entry["to"])
            kind = SegmentKind(entry.get("kind", SegmentKind.APPROACH.value))
            waypoints = np.asarray(entry["waypoints"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise MapLoadError(f"Malformed segment entry: {e}", element_id=entry.get("id")) from e

        if seg_id in segments:
            raise MapLoadError("Duplicate segment id", element_id=seg_id)
        for ref in (from_node, to_node):
            if ref not in nodes:
                raise MapLoadError(f"Segment references missing node {ref}", element_id=seg_id)
        if waypoints.ndim != 2 or waypoints.shape[1] != 2 or len(waypoints) < 2:
            raise MapLoadError("Segment needs at least two 2D waypoints", element_id=seg_id)
        if not np.all(np.isfinite(waypoints)):
            raise MapLoadError("Segment has non-finite waypoints", element_id=seg_id)

        steps = np.hypot(*np.diff(waypoints, axis=0).T)
        if np.any(steps == 0.0):
            raise MapLoadError("Segment has repeated consecutive waypoints", element_id=seg_id)

        start_gap = np.hypot(*(waypoints[0] - nodes[from_node].position))
        end_gap = np.hypot(*(waypoints[-1] - nodes[to_node].position))
        if start_gap > JOIN_TOLERANCE or end_gap > JOIN_TOLERANCE:
            raise MapLoadError("Segment polyline does not close on its end nodes", element_id=seg_id)

        segments[seg_id] = Segment(
            id=seg_id, from_node=from_node, to_node=to_node, waypoints=waypoints, kind=kind
        )
    return segments


def _parse_regions(raw_regions: list) -> Dict[str, Region]:
    regions: Dict[str, Region] = {}
    for entry in raw_regions:
        try:
            name = str(entry["name"])
            vertices = tuple((float(x), float(y)) for x, y in entry["polygon"])
        except (KeyError, TypeError, ValueError) as e:
            raise MapLoadError(f"Malformed region entry {entry!r}") from e
        if len(vertices) < 3:
            raise MapLoadError("Region needs at least three vertices", element_id=name)
        if not LinearRing(vertices).is_simple or not Polygon(vertices).is_valid:
            raise MapLoadError("Region polygon is self-intersecting", element_id=name)
        regions[name] = Region(name=name, polygon=vertices)
    return regions


def _check_extent(extent, nodes: Dict[int, Node], segments: Dict[int, Segment]) -> None:
    width, height = extent
    for node in nodes.values():
        x, y = node.position
        if not (0.0 <= x <= width and 0.0 <= y <= height):
            raise MapLoadError("Node lies outside the map extent", element_id=node.id)
    for segment in segments.values():
        w = segment.waypoints
        if w[:, 0].min() < 0.0 or w[:, 0].max() > width or w[:, 1].min() < 0.0 or w[:, 1].max() > height:
            raise MapLoadError("Segment leaves the map extent", element_id=segment.id)
