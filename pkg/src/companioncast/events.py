"""Session events and the append-only JSON-lines log.

Every externally visible occurrence in a session becomes one flat JSON line:
{"seq": n, "wall_time": t, "kind": "...", ...payload}. The same line is what
goes over the realtime stream, so transcripts and wire traffic never drift
apart. Serialization is byte-stable for identical event sequences.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

logger = logging.getLogger(__name__)

EVENT_KINDS = (
    "session_created",
    "conversation_started",
    "agent_turn",
    "duck_on",
    "duck_off",
    "evaluation_report",
    "conversation_ended",
    "user_message",
    "clock_sync",
    "error",
)

_RESERVED_KEYS = ("seq", "wall_time", "kind")


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    wall_time: float
    kind: str
    payload: Mapping[str, Any]


def event_to_json(event: SessionEvent) -> str:
    """One flat, single-line JSON object per event."""
    record: dict[str, Any] = {"seq": event.seq, "wall_time": event.wall_time, "kind": event.kind}
    record.update(event.payload)
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def event_from_json(line: str) -> SessionEvent:
    record = json.loads(line)
    payload = {k: v for k, v in record.items() if k not in _RESERVED_KEYS}
    return SessionEvent(seq=record["seq"], wall_time=record["wall_time"], kind=record["kind"], payload=payload)


class SessionEventLog:
    """Per-session append-only event log, optionally mirrored to a JSONL file.

    Owned by exactly one session; seq numbers are gapless from 0.
    """

    def __init__(self, path: Path | None = None, now: Callable[[], float] | None = None):
        import time

        self._events: list[SessionEvent] = []
        self._now = now or time.time
        self._path = Path(path) if path is not None else None
        self._fh = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self._path, "w", encoding="utf-8")

    def append(self, kind: str, payload: Mapping[str, Any]) -> SessionEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        for key in _RESERVED_KEYS:
            if key in payload:
                raise ValueError(f"payload may not shadow the {key!r} field")
        event = SessionEvent(seq=len(self._events), wall_time=self._now(), kind=kind, payload=dict(payload))
        self._events.append(event)
        if self._fh is not None:
            self._fh.write(event_to_json(event) + "\n")
            self._fh.flush()
        return event

    @property
    def events(self) -> list[SessionEvent]:
        return list(self._events)

    def to_jsonl(self) -> str:
        return "".join(event_to_json(e) + "\n" for e in self._events)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
