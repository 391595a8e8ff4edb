"""
HV identification: CAV filtering, memory-guided false-positive rejection and
candidate-path prediction.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..perception.models import Detection
from ..road_map.geometry import distance_to_path
from ..road_map.models import Point, RoadGraph
from ..road_map.routing import candidate_paths_from_entry
from ..v2x.messages import CavMessage
from .models import HvEstimate, HvMemory, HvThresholds

logger = logging.getLogger(__name__)

GRACE_TOLERANCE = 1e-9


def _distance_matrix(detections: Sequence[Detection], points: Sequence[Point]) -> np.ndarray:
    if not detections or not points:
        return np.full((len(detections), len(points)), np.inf)
    d = np.array([det.position for det in detections], dtype=float)
    p = np.asarray(points, dtype=float)
    return np.hypot(d[:, None, 0] - p[None, :, 0], d[:, None, 1] - p[None, :, 1])


def filter_cavs(
    detections: Sequence[Detection], cav_messages: Sequence[CavMessage], tau_cav: float
) -> List[Detection]:
    """Drop detections closer than ``tau_cav`` to any reported CAV position."""
    if not cav_messages:
        return list(detections)
    d = _distance_matrix(detections, [m.position for m in cav_messages])
    return [det for det, row in zip(detections, d) if row.min() >= tau_cav]


def reject_fps(detections: Sequence[Detection], memory: HvMemory, tau_fp: float) -> List[Detection]:
    """
    Keep detections closer than ``tau_fp`` to a remembered HV or pending detection.

    With empty memory nothing survives; new HVs are admitted through the
    pending list that :func:`identify_hvs` maintains.
    """
    points = list(memory.positions) + [p.position for p in memory.pending]
    if not points:
        return []
    d = _distance_matrix(detections, points)
    return [det for det, row in zip(detections, d) if row.min() < tau_fp]


def associate(detections: Sequence[Detection], points: Sequence[Point], tau: float) -> Dict[int, int]:
    """
    Greedy one-to-one nearest-neighbor association.

    Pairs closer than ``tau`` are taken in ascending distance, ties going to
    the lower detection index and then the lower row index.

    Returns:
        Mapping detection index -> row index
    """
    d = _distance_matrix(detections, points)
    det_idx, row_idx = np.nonzero(d < tau)
    order = np.lexsort((row_idx, det_idx, d[det_idx, row_idx]))

    matches: Dict[int, int] = {}
    used_rows = set()
    for k in order:
        i, j = int(det_idx[k]), int(row_idx[k])
        if i in matches or j in used_rows:
            continue
        matches[i] = j
        used_rows.add(j)
    return matches


def _memory_rows(memory: HvMemory) -> List[Point]:
    return list(memory.positions) + [p.position for p in memory.pending]


def predict_paths(
    hv_detections: Sequence[Detection],
    graph: RoadGraph,
    memory: HvMemory,
    tau_p: float,
    tau_fp: float = HvThresholds.tau_fp,
) -> List[HvEstimate]:
    """
    Candidate paths for each identified HV detection.

    A detection associated with a tracked HV keeps the HV's previous candidates
    that stay within ``tau_p``; when none do the set is re-seeded from the
    nearest node. Any other detection starts a new track seeded the same way.
    """
    n_tracked = len(memory.estimates)
    matches = associate(hv_detections, _memory_rows(memory), tau_fp)
    next_id = memory.next_track_id

    estimates: List[HvEstimate] = []
    for i, det in enumerate(hv_detections):
        row = matches.get(i)
        if row is not None and row < n_tracked:
            previous = memory.estimates[row]
            kept = tuple(p for p in previous.candidate_paths if distance_to_path(det.position, p) <= tau_p)
            if len(kept) < len(previous.candidate_paths):
                logger.debug(
                    f"HV {previous.track_id}: {len(kept)} of {len(previous.candidate_paths)} candidate paths remain"
                )
            if not kept:
                kept = tuple(candidate_paths_from_entry(graph, det.position, tau_p))
                logger.debug(f"HV {previous.track_id}: candidate set re-seeded with {len(kept)} paths")
            estimates.append(
                HvEstimate(previous.track_id, det.pose, kept, previous.first_seen, det.t)
            )
            continue

        first_seen = memory.pending[row - n_tracked].t if row is not None else det.t
        candidates = tuple(candidate_paths_from_entry(graph, det.position, tau_p))
        estimates.append(HvEstimate(next_id, det.pose, candidates, min(first_seen, det.t), det.t))
        logger.info(f"New HV track {next_id} at ({det.x_hat:.3f}, {det.y_hat:.3f}) with {len(candidates)} candidates")
        next_id += 1
    return estimates


def _near_entry_lane(det: Detection, graph: RoadGraph, tau_p: float) -> bool:
    return any(distance_to_path(det.position, lane) <= tau_p for lane in graph.entry_lanes)


def identify_hvs(
    detections: Sequence[Detection],
    cav_messages: Sequence[CavMessage],
    memory: HvMemory,
    thresholds: HvThresholds,
    graph: RoadGraph,
    t: Optional[float] = None,
) -> Tuple[List[HvEstimate], HvMemory]:
    """
    Turn one frame of detections into identified HVs.

    Args:
        detections: Sensor output for the frame
        cav_messages: CAV messages the infrastructure received this tick
        memory: Memory from the previous call
        thresholds: tau_cav, tau_fp, tau_p and the grace window
        graph: Road graph for candidate paths
        t: Current time used for aging; defaults to the detections' time

    Returns:
        (HVs seen this frame, updated memory). Estimates not seen this frame
        stay in memory until their grace window expires.
    """
    survivors = filter_cavs(detections, cav_messages, thresholds.tau_cav)
    rows = _memory_rows(memory)
    matches = associate(survivors, rows, thresholds.tau_fp)
    hv_detections = [survivors[i] for i in sorted(matches)]

    # unmatched detections on an entry lane wait one frame for confirmation
    seeds = []
    distances = _distance_matrix(survivors, rows)
    for i, det in enumerate(survivors):
        if i in matches:
            continue
        if rows and distances[i].min() < thresholds.tau_fp:
            continue
        if _near_entry_lane(det, graph, thresholds.tau_p):
            seeds.append(det)

    estimates = predict_paths(hv_detections, graph, memory, thresholds.tau_p, thresholds.tau_fp)

    now = t
    if now is None and detections:
        now = detections[0].t
    matched_rows = set(matches.values())
    retained: List[HvEstimate] = []
    for k, estimate in enumerate(memory.estimates):
        if k in matched_rows:
            continue
        if now is not None and now - estimate.last_seen > thresholds.grace_period + GRACE_TOLERANCE:
            logger.info(f"HV track {estimate.track_id} dropped after {now - estimate.last_seen:.2f}s unseen")
            continue
        retained.append(estimate)

    next_track_id = max([memory.next_track_id] + [e.track_id + 1 for e in estimates])
    updated = HvMemory(
        estimates=tuple(sorted(estimates + retained, key=lambda e: e.track_id)),
        pending=tuple(seeds),
        next_track_id=next_track_id,
    )
    return estimates, updated
