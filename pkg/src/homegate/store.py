"""Event log and snapshot persistence.

Events are one canonical JSON object per line in ``events.log`` with
strictly increasing, gapless sequence numbers; snapshots are a single
canonical JSON document in ``state.snapshot``. Canonical means sorted
keys and fixed separators so byte equality means state equality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class StoreError(Exception):
    pass


class CorruptLog(StoreError):
    """A log line or snapshot failed to parse; carries the position."""


EVENT_KINDS = frozenset({
    "device_added",
    "device_removed",
    "user_added",
    "user_pending",
    "user_resolved",
    "user_removed",
    "policy_submitted",
    "conflict_detected",
    "session_opened",
    "session_responded",
    "session_expired",
    "clause_status",
    "rule_installed",
    "rule_retired",
    "command_decided",
    "notification_emitted",
    "presence_changed",
    "clock_advanced",
})


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    at: int
    payload: dict

    def to_doc(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "at": self.at, "payload": self.payload}

    @staticmethod
    def from_doc(doc: dict) -> "Event":
        return Event(seq=int(doc["seq"]), kind=doc["kind"], at=int(doc["at"]),
                     payload=doc["payload"])


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


class Store:
    """Single-writer event log with optional on-disk persistence."""

    EVENTS_FILE = "events.log"
    SNAPSHOT_FILE = "state.snapshot"

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        self._events: list[Event] = []
        self._last_seq = 0
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            path = self.root / self.EVENTS_FILE
            if path.exists():
                self._events = self._read_events(path)
                self._last_seq = self._events[-1].seq if self._events else 0

    def append_event(self, kind: str, payload: dict, at: int) -> int:
        if kind not in EVENT_KINDS:
            raise StoreError(f"unknown event kind {kind!r}")
        seq = self._last_seq + 1
        event = Event(seq=seq, kind=kind, at=at, payload=payload)
        self._events.append(event)
        self._last_seq = seq
        if self.root is not None:
            with open(self.root / self.EVENTS_FILE, "a", encoding="utf-8") as fh:
                fh.write(canonical_json(event.to_doc()) + "\n")
        return seq

    def events(self) -> list[Event]:
        return list(self._events)

    @staticmethod
    def _read_events(path: Path) -> list[Event]:
        events: list[Event] = []
        expected = 1
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as err:
                    raise CorruptLog(f"{path}:{lineno}: {err}") from None
                event = Event.from_doc(doc)
                if event.seq != expected:
                    raise CorruptLog(
                        f"{path}:{lineno}: sequence gap (expected {expected}, got {event.seq})")
                expected += 1
                events.append(event)
        return events

    def write_snapshot(self, state_doc: dict) -> str:
        text = canonical_json(state_doc)
        if self.root is not None:
            tmp = self.root / (self.SNAPSHOT_FILE + ".tmp")
            tmp.write_text(text, encoding="utf-8")
            tmp.replace(self.root / self.SNAPSHOT_FILE)
        self._snapshot_text = text
        return text

    def read_snapshot(self) -> dict:
        if self.root is None:
            text = getattr(self, "_snapshot_text", None)
            if text is None:
                raise StoreError("no snapshot available")
        else:
            path = self.root / self.SNAPSHOT_FILE
            if not path.exists():
                raise StoreError(f"no snapshot at {path}")
            text = path.read_text(encoding="utf-8")
        try:
            return json.loads(text)
        except json.JSONDecodeError as err:
            raise CorruptLog(f"snapshot byte {err.pos}: {err.msg}") from None
