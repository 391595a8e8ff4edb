"""
Message trace file: one CSV row per publish or delivery event.
"""

import csv
from pathlib import Path
from typing import Iterable, List, Union

from .bus import BusEvent

TRACE_COLUMNS = ["tick", "event_kind", "sender", "receiver", "message_kind", "payload_digest"]


class MessageTraceWriter:
    """Appends bus events to a CSV file with a fixed column order."""

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(TRACE_COLUMNS)

    def write(self, events: Iterable[BusEvent]) -> None:
        for event in events:
            self._writer.writerow(list(event))

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> "MessageTraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_message_trace(path: Union[str, Path]) -> List[BusEvent]:
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return [
            BusEvent(
                tick=int(row["tick"]),
                event_kind=row["event_kind"],
                sender=int(row["sender"]),
                receiver=int(row["receiver"]),
                message_kind=row["message_kind"],
                digest=row["payload_digest"],
            )
            for row in reader
        ]
