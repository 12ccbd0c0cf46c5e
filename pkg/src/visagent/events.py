"""Append-only, totally ordered event log shared by pipelines and runs."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    data: dict[str, Any] = field(default_factory=dict)
    timestamp: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "kind": self.kind, "data": self.data, "timestamp": self.timestamp}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Event":
        return cls(seq=doc["seq"], kind=doc["kind"], data=doc.get("data", {}), timestamp=doc.get("timestamp", 0.0))


class EventLog:
    def __init__(self, events: list[Event] | None = None) -> None:
        self._events: list[Event] = list(events or [])
        self._lock = threading.Lock()

    def append(self, kind: str, **data: Any) -> Event:
        with self._lock:
            event = Event(seq=len(self._events), kind=kind, data=data, timestamp=time.time())
            self._events.append(event)
            return event

    def events(self, after: int = -1) -> list[Event]:
        with self._lock:
            return [e for e in self._events if e.seq > after]

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events() if e.kind == kind)

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)

    def to_dicts(self) -> list[dict[str, Any]]:
        return [e.to_dict() for e in self.events()]

    @classmethod
    def from_dicts(cls, docs: list[dict[str, Any]]) -> "EventLog":
        return cls([Event.from_dict(d) for d in docs])
