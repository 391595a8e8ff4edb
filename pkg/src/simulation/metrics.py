"""
Run metrics: per-module computation time, yields, travel times and detection quality.
"""

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..intersection.models import FloorCase, ManagementDecision
from ..perception.evaluation import DEFAULT_IOU_THRESHOLDS, evaluate_ap
from ..perception.models import Detection, GroundTruthFrame

MODULES = ("Object Detection", "HV Identification", "Intersection Management")
TOTAL = "Total"


class CollisionEvent(NamedTuple):
    tick: int
    t: float
    a: int
    b: int


class YieldEvent(NamedTuple):
    t: float
    cav_id: int
    v_ref: float


class TimingStats(NamedTuple):
    min_ms: float
    max_ms: float
    mean_ms: float


def timing_stats(samples: Sequence[float]) -> TimingStats:
    values = np.asarray(samples, dtype=float)
    return TimingStats(float(values.min()), float(values.max()), float(values.mean()))


@dataclass
class Metrics:
    """Aggregates collected while a scenario runs."""
    collision_events: List[CollisionEvent] = field(default_factory=list)
    timings: Dict[str, List[float]] = field(default_factory=lambda: {name: [] for name in MODULES})
    travel_times: Dict[int, float] = field(default_factory=dict)
    yield_events: List[YieldEvent] = field(default_factory=list)
    floor_cases: List[Tuple[float, FloorCase]] = field(default_factory=list)
    detection_frames: List[List[Detection]] = field(default_factory=list)
    truth_frames: List[GroundTruthFrame] = field(default_factory=list)
    tick_totals: List[float] = field(default_factory=list)

    def record_detection_timing(self, detection_ms: float) -> None:
        self.timings[MODULES[0]].append(detection_ms)

    def record_timing(self, detection_ms: float, identification_ms: float, management_ms: float) -> None:
        """One management tick; ``detection_ms`` sums the sense calls since the previous one."""
        self.timings[MODULES[1]].append(identification_ms)
        self.timings[MODULES[2]].append(management_ms)
        self.tick_totals.append(detection_ms + identification_ms + management_ms)

    def record_decision(self, decision: ManagementDecision, v_max: float) -> None:
        for cav_id, v_ref in decision.commands.items():
            if v_ref < v_max - 1e-9:
                self.yield_events.append(YieldEvent(decision.t, cav_id, v_ref))
        for case in decision.floor_cases:
            self.floor_cases.append((decision.t, case))

    def record_frame(self, truth: GroundTruthFrame, detections: Sequence[Detection]) -> None:
        self.truth_frames.append(truth)
        self.detection_frames.append(list(detections))

    def timing_table(self) -> Dict[str, Optional[TimingStats]]:
        """Min/max/mean per module plus the per-management-tick total."""
        table: Dict[str, Optional[TimingStats]] = {}
        for name in MODULES:
            samples = self.timings[name]
            table[name] = timing_stats(samples) if samples else None
        table[TOTAL] = timing_stats(self.tick_totals) if self.tick_totals else None
        return table

    def management_mean_ms(self) -> Optional[float]:
        """Mean per-tick identification plus management time."""
        ident, manage = self.timings[MODULES[1]], self.timings[MODULES[2]]
        if not ident:
            return None
        return float(np.mean(np.add(ident, manage)))

    def detection_ap(self, thresholds: Sequence[float] = DEFAULT_IOU_THRESHOLDS) -> Dict[float, float]:
        return evaluate_ap(self.detection_frames, self.truth_frames, thresholds)
