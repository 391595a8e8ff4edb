"""
Plain-text detection logs.

A log is a sequence of frames. Each frame is a header line ``<t> <count>``
followed by ``count`` lines ``<x> <y> <psi> <length> <width> <score>`` in SI
units and radians. Blank lines and lines starting with ``#`` are ignored.
Truth logs use the same layout with a score of 1.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from ..errors import LogFormatError, SimulationError
from .models import Detection, DetectionFrame, GroundTruthFrame

logger = logging.getLogger(__name__)

LOG_HEADER = "# detection log: frame '<t> <count>', then '<x> <y> <psi> <length> <width> <score>'"


def write_detection_log(path: Union[str, Path], frames: Iterable[DetectionFrame]) -> Path:
    """Write frames in time order; floats are written with repr so replay is exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [LOG_HEADER]
    last_t = None
    for frame in frames:
        if last_t is not None and frame.t <= last_t:
            raise SimulationError(f"Frames must be strictly increasing in time: {frame.t} after {last_t}")
        last_t = frame.t
        lines.append(f"{frame.t!r} {len(frame.detections)}")
        for d in frame.detections:
            lines.append(f"{d.x_hat!r} {d.y_hat!r} {d.psi_hat!r} {d.length!r} {d.width!r} {d.score!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_truth_log(path: Union[str, Path], frames: Iterable[GroundTruthFrame]) -> Path:
    return write_detection_log(
        path,
        (
            DetectionFrame(
                t=f.t,
                detections=tuple(
                    Detection(v.state.x, v.state.y, v.state.psi, v.length, v.width, f.t)
                    for v in f.vehicles
                ),
            )
            for f in frames
        ),
    )


def _floats(tokens: Sequence[str], line_number: int) -> List[float]:
    try:
        return [float(tok) for tok in tokens]
    except ValueError:
        raise LogFormatError(f"expected numbers, got {' '.join(tokens)!r}", line_number) from None


def replay_log(path: Union[str, Path]) -> List[DetectionFrame]:
    """
    Read a detection log.

    Returns:
        Frames in file order; an empty file gives an empty list

    Raises:
        FileNotFoundError: if the file does not exist
        LogFormatError: for a malformed line, a short frame or a non-increasing time
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Detection log not found: {path}")

    frames: List[DetectionFrame] = []
    t = None
    expected = 0
    pending: List[Detection] = []
    header_line = 0

    with open(path, "r", encoding="utf-8") as f:
        for line_number, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()

            if expected == 0:
                if len(tokens) != 2:
                    raise LogFormatError(f"expected frame header '<t> <count>', got {line!r}", line_number)
                frame_t = _floats(tokens[:1], line_number)[0]
                try:
                    count = int(tokens[1])
                except ValueError:
                    raise LogFormatError(f"frame count must be an integer, got {tokens[1]!r}", line_number) from None
                if count < 0:
                    raise LogFormatError(f"negative frame count {count}", line_number)
                if frames and frame_t <= frames[-1].t:
                    raise LogFormatError(
                        f"frame time {frame_t} is not after previous frame {frames[-1].t}", line_number
                    )
                t, expected, pending, header_line = frame_t, count, [], line_number
                if count == 0:
                    frames.append(DetectionFrame(t=t, detections=()))
                continue

            if len(tokens) != 6:
                raise LogFormatError(f"expected 6 detection fields, got {len(tokens)}", line_number)
            x, y, psi, length, width, score = _floats(tokens, line_number)
            try:
                pending.append(Detection(x, y, psi, length, width, t, score))
            except SimulationError as e:
                raise LogFormatError(str(e), line_number) from None
            expected -= 1
            if expected == 0:
                frames.append(DetectionFrame(t=t, detections=tuple(pending)))

    if expected > 0:
        raise LogFormatError(f"frame is missing {expected} detection lines", header_line)

    logger.info(f"Replayed {len(frames)} frames from {path}")
    return frames


def truth_frames(frames: Sequence[DetectionFrame]) -> List[GroundTruthFrame]:
    """Interpret a replayed truth log as ground-truth frames."""
    return [GroundTruthFrame.from_detections(f.t, f.detections) for f in frames]
