"""
Single-class average precision over oriented-box IoU.
"""

import logging
from typing import Dict, List, Sequence

import numpy as np

from ..errors import SimulationError
from .boxes import oriented_iou
from .models import Detection, GroundTruthFrame, TruthVehicle

logger = logging.getLogger(__name__)

DEFAULT_IOU_THRESHOLDS = (0.3, 0.5, 0.7)


def truth_box(vehicle: TruthVehicle, t: float) -> Detection:
    return Detection(
        x_hat=vehicle.state.x,
        y_hat=vehicle.state.y,
        psi_hat=vehicle.state.psi,
        length=vehicle.length,
        width=vehicle.width,
        t=t,
    )


def _match_flags(
    detections: Sequence[Sequence[Detection]],
    truth: Sequence[GroundTruthFrame],
    threshold: float,
) -> np.ndarray:
    """True-positive flag per detection, in descending-score rank order."""
    ranked = [
        (det.score, frame_idx, det_idx)
        for frame_idx, frame in enumerate(detections)
        for det_idx, det in enumerate(frame)
    ]
    # stable: equal scores keep frame then detection order
    ranked.sort(key=lambda r: -r[0])

    truth_boxes = [[truth_box(v, f.t) for v in f.vehicles] for f in truth]
    matched = [np.zeros(len(boxes), dtype=bool) for boxes in truth_boxes]
    flags = np.zeros(len(ranked), dtype=bool)
    for rank, (_, frame_idx, det_idx) in enumerate(ranked):
        det = detections[frame_idx][det_idx]
        best_iou, best_j = threshold, -1
        for j, box in enumerate(truth_boxes[frame_idx]):
            if matched[frame_idx][j]:
                continue
            iou = oriented_iou(det, box)
            if iou >= best_iou:
                if best_j < 0 or iou > best_iou:
                    best_iou, best_j = iou, j
        if best_j >= 0:
            matched[frame_idx][best_j] = True
            flags[rank] = True
    return flags


def average_precision(tp_flags: np.ndarray, n_positives: int) -> float:
    """Area under the all-point interpolated precision/recall curve."""
    if n_positives == 0 or len(tp_flags) == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    precision = tp / (tp + fp)
    interpolated = np.maximum.accumulate(precision[::-1])[::-1]
    return float(interpolated[tp_flags].sum() / n_positives)


def evaluate_ap(
    detections: Sequence[Sequence[Detection]],
    truth: Sequence[GroundTruthFrame],
    iou_thresholds: Sequence[float] = DEFAULT_IOU_THRESHOLDS,
) -> Dict[float, float]:
    """
    Average precision at each IoU threshold.

    Detections are ranked by descending score over the whole stream; each is
    greedily matched to the unmatched truth box in its frame with the highest
    IoU at or above the threshold.

    Args:
        detections: Per-frame detection lists
        truth: Per-frame ground truth, aligned index-for-index with ``detections``
        iou_thresholds: IoU thresholds in (0, 1]

    Returns:
        Mapping threshold -> AP in [0, 1]
    """
    if len(detections) != len(truth):
        raise SimulationError(
            f"Detection and truth streams differ in length: {len(detections)} vs {len(truth)}"
        )
    for frame_dets, frame_truth in zip(detections, truth):
        for det in frame_dets:
            if abs(det.t - frame_truth.t) > 1e-6:
                raise SimulationError(f"Detection at t={det.t} paired with truth frame t={frame_truth.t}")

    n_positives = sum(len(f.vehicles) for f in truth)
    n_detections = sum(len(f) for f in detections)
    if n_positives == 0 and n_detections > 0:
        logger.warning(f"Ground truth is empty but {n_detections} detections were given; AP is 0")

    results: Dict[float, float] = {}
    for threshold in iou_thresholds:
        if not 0.0 < threshold <= 1.0:
            raise SimulationError(f"IoU threshold must be in (0, 1], got {threshold}")
        flags = _match_flags(detections, truth, threshold)
        results[float(threshold)] = average_precision(flags, n_positives)
    return results


def format_ap(results: Dict[float, float]) -> List[str]:
    return [f"AP@{threshold:g}: {ap:.4f}" for threshold, ap in sorted(results.items())]
