"""
V2X message sets exchanged between CAVs and the infrastructure.
"""

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

from ..road_map.models import PathRef, Point
from ..vehicle_dynamics.models import VehicleState


class LinkKind(str, Enum):
    V2V = "v2v"
    V2I = "v2i"


class MessageKind(str, Enum):
    CAV = "cav"
    INFRA = "infra"


@dataclass(frozen=True)
class CavMessage:
    """State and intent broadcast by a CAV."""
    x: float
    y: float
    psi: float
    path: PathRef
    v: float
    sender_id: int
    t_stamp: float

    kind = MessageKind.CAV

    @property
    def position(self) -> Point:
        return (self.x, self.y)

    @property
    def state(self) -> VehicleState:
        return VehicleState(x=self.x, y=self.y, psi=self.psi, v=self.v)

    @property
    def target_id(self) -> Optional[int]:
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x,
            "y": self.y,
            "psi": self.psi,
            "path": {
                "segment_ids": list(self.path.segment_ids),
                "polyline": self.path.polyline.tolist(),
            },
            "v": self.v,
            "sender_id": self.sender_id,
            "t_stamp": self.t_stamp,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CavMessage":
        path = PathRef.from_points(
            [tuple(p) for p in data["path"]["polyline"]],
            segment_ids=tuple(data["path"]["segment_ids"]),
        )
        return cls(
            x=data["x"],
            y=data["y"],
            psi=data["psi"],
            path=path,
            v=data["v"],
            sender_id=data["sender_id"],
            t_stamp=data["t_stamp"],
        )


@dataclass(frozen=True)
class InfraMessage:
    """Velocity command from the infrastructure to one CAV."""
    infra_id: int
    t_stamp: float
    target_id: int
    v_ref: float

    kind = MessageKind.INFRA

    @property
    def sender_id(self) -> int:
        return self.infra_id

    def to_dict(self) -> Dict[str, Any]:
        return {
            "infra_id": self.infra_id,
            "t_stamp": self.t_stamp,
            "target_id": self.target_id,
            "v_ref": self.v_ref,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InfraMessage":
        return cls(**data)


Message = Union[CavMessage, InfraMessage]


@dataclass(frozen=True)
class Envelope:
    """A message together with where and when it was published."""
    payload: Message
    sender_position: Point
    publish_time: float

    @property
    def sort_key(self) -> Tuple[float, int, int]:
        target = self.payload.target_id
        return (self.publish_time, self.payload.sender_id, -1 if target is None else target)


def make_cav_message(state: VehicleState, path: PathRef, id: int, t: float) -> CavMessage:
    """Package a CAV's state and path into its broadcast message."""
    return CavMessage(x=state.x, y=state.y, psi=state.psi, path=path, v=state.v, sender_id=id, t_stamp=t)


def payload_digest(message: Message) -> str:
    """Short content hash of a message for trace files."""
    canonical = json.dumps(message.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha1(canonical.encode("utf-8")).hexdigest()[:12]
