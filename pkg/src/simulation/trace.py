"""
JSON-lines run trace: a header line, then one record per physics tick.

Keys are sorted and floats written with their shortest round-trip form, so two
runs with equal state produce byte-identical files.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

from ..errors import LogFormatError
from .collisions import check_collisions

logger = logging.getLogger(__name__)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_trace(path: Union[str, Path], header: Dict[str, Any], records: Sequence[Dict[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_dumps(header) + "\n")
        for record in records:
            f.write(_dumps(record) + "\n")
    logger.info(f"Wrote trace with {len(records)} records to {path}")
    return path


def read_trace(path: Union[str, Path]) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """
    Load a trace file.

    Raises:
        FileNotFoundError: if the file does not exist
        LogFormatError: for an unparsable line or non-increasing ticks
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace file not found: {path}")

    header: Dict[str, Any] = {}
    records: List[Dict[str, Any]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
            except json.JSONDecodeError as e:
                raise LogFormatError(f"invalid JSON: {e.msg}", line_number) from None
            if line_number == 1:
                header = item
                continue
            if records and item["tick"] <= records[-1]["tick"]:
                raise LogFormatError(f"tick {item['tick']} does not follow {records[-1]['tick']}", line_number)
            records.append(item)
    return header, records


def command_table(records: Sequence[Dict[str, Any]]) -> Tuple[List[int], List[Tuple[float, Dict[int, float]]]]:
    """Commanded velocities per management tick: (CAV ids, [(t, {id: v_ref})])."""
    rows: List[Tuple[float, Dict[int, float]]] = []
    ids = set()
    for record in records:
        manage = record.get("manage")
        if manage is None:
            continue
        commands = {int(k): v for k, v in manage["decision"]["commands"].items()}
        ids.update(commands)
        rows.append((record["t"], commands))
    return sorted(ids), rows


def summarize_trace(header: Dict[str, Any], records: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    """Replay summary computed from the trace alone."""
    v_max = header.get("v_max", 0.5)
    footprints = {v["id"]: tuple(v.get("footprint", (0.30, 0.15))) for v in header.get("vehicles", [])}
    cav_ids, rows = command_table(records)

    yields = 0
    ranges: Dict[str, List[float]] = {}
    for _, commands in rows:
        for cav_id, v in commands.items():
            if v < v_max - 1e-9:
                yields += 1
            lo_hi = ranges.setdefault(str(cav_id), [v, v])
            lo_hi[0], lo_hi[1] = min(lo_hi[0], v), max(lo_hi[1], v)

    floor_cases = sum(len(r["manage"]["decision"]["floor_cases"]) for r in records if "manage" in r)
    seen = sorted({v["id"] for r in records for v in r["vehicles"]})
    collisions = check_collisions(records, footprints)
    return {
        "scenario": header.get("scenario"),
        "seed": header.get("seed"),
        "ticks": len(records),
        "duration": round(len(records) * header.get("physics_dt", 0.01), 9),
        "management_ticks": len(rows),
        "vehicles": seen,
        "commanded_cavs": cav_ids,
        "yield_events": yields,
        "floor_cases": floor_cases,
        "collisions": [list(c) for c in collisions],
        "command_range": ranges,
    }
