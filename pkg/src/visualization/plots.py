import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.patches as patches
import matplotlib.pyplot as plt

from ..intersection.models import ManagementDecision
from ..perception.boxes import box_corners
from ..road_map.models import RoadGraph, SegmentKind
from ..simulation.trace import command_table

logger = logging.getLogger(__name__)

SEGMENT_COLORS = {
    SegmentKind.APPROACH: "tab:blue",
    SegmentKind.CONNECTOR: "tab:gray",
    SegmentKind.DEPARTURE: "tab:green",
    SegmentKind.BELTWAY: "lightgray",
}


def plot_commands(records: Sequence[Dict[str, Any]], out_path: Path, v_max: Optional[float] = None) -> Path:
    """
    Plot commanded velocity over time, one step line per CAV.

    Args:
        records: Trace records of a run
        out_path: PNG file to write
        v_max: Draws a reference line when given
    """
    cav_ids, rows = command_table(records)
    fig, ax = plt.subplots(1, 1, figsize=(10, 4))
    for cav_id in cav_ids:
        times = [t for t, commands in rows if cav_id in commands]
        values = [commands[cav_id] for _, commands in rows if cav_id in commands]
        ax.step(times, values, where="post", label=f"CAV {cav_id}", linewidth=1.5)

    if v_max is not None:
        ax.axhline(v_max, color="black", linestyle=":", linewidth=1, alpha=0.6)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("commanded v_ref (m/s)")
    ax.set_title("Infrastructure velocity commands")
    if cav_ids:
        ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    plt.tight_layout()

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    plt.savefig(out_path, format="png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Command plot saved to {out_path}")
    return out_path


def plot_snapshot(
    graph: RoadGraph,
    record: Dict[str, Any],
    out_path: Path,
    decision: Optional[ManagementDecision] = None,
    footprint: Sequence[float] = (0.30, 0.15),
) -> Path:
    """
    Draw the map, the vehicles of one trace record and, with a decision, the
    occupied regions it was based on. Earlier prediction steps are drawn
    more opaque.
    """
    fig, ax = plt.subplots(1, 1, figsize=(8, 8))
    for seg_id in sorted(graph.segments):
        segment = graph.segments[seg_id]
        ax.plot(segment.waypoints[:, 0], segment.waypoints[:, 1], color=SEGMENT_COLORS[segment.kind], linewidth=1)

    for name, color in (("intersection", "orange"), ("v2i_coverage", "purple")):
        if name in graph.regions:
            ax.add_patch(patches.Polygon(
                graph.regions[name].polygon, closed=True, fill=False, edgecolor=color, linestyle="--", linewidth=1
            ))

    if decision is not None:
        regions: List[Any] = list(decision.hv_regions.values()) + list(decision.cav_regions.values())
        for region in regions:
            color = "red" if region.kind.value == "hv" else "tab:cyan"
            for h, step in enumerate(region.footprints):
                alpha = 0.25 * (1.0 - h / max(region.horizon, 1))
                for fp in step:
                    ax.add_patch(patches.Polygon(fp.corners(), closed=True, facecolor=color, edgecolor="none", alpha=alpha))

    for vehicle in record["vehicles"]:
        color = "red" if vehicle["kind"] == "hv" else "black"
        corners = box_corners(vehicle["x"], vehicle["y"], vehicle["psi"], footprint[0], footprint[1])
        ax.add_patch(patches.Polygon(corners, closed=True, facecolor=color, edgecolor=color, alpha=0.9))
        label = f"{vehicle['id']}"
        if decision is not None and vehicle["kind"] == "cav" and vehicle["id"] in decision.commands:
            label += f" ({decision.commands[vehicle['id']]:.1f})"
        ax.annotate(
            label,
            (vehicle["x"], vehicle["y"] + 0.15),
            bbox=dict(boxstyle="round,pad=0.2", facecolor="white", edgecolor=color, alpha=0.9),
            fontsize=7,
            ha="center",
            va="bottom",
        )

    legend_elements = [
        patches.Patch(color="black", label="CAV"),
        patches.Patch(color="red", label="HV"),
        patches.Patch(color="tab:cyan", alpha=0.4, label="CAV occupied region"),
        patches.Patch(color="red", alpha=0.25, label="HV occupied region"),
    ]
    ax.legend(handles=legend_elements, loc="upper right", fontsize=8)
    min_x, min_y, max_x, max_y = graph.bounds
    ax.set_xlim(min_x - 0.2, max_x + 0.2)
    ax.set_ylim(min_y - 0.2, max_y + 0.2)
    ax.set_aspect("equal")
    ax.set_title(f"t = {record['t']:.1f} s")
    plt.tight_layout()

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    plt.savefig(out_path, format="png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Snapshot saved to {out_path}")
    return out_path
