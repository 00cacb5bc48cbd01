"""Event-log data model: JSONL parsing, delta application, and document
reconstruction at arbitrary timestamps.

Logs are append-only JSONL, one record per line. Indices are in Unicode
code points. Reconstruction folds all text-change deltas with
``ts_ms <= t`` (closed upper bound) in ``(ts_ms, seq)`` order onto the
empty string.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union

from .errors import (
    DanglingReference,
    MalformedRecord,
    NegativeCount,
    SpanOverflow,
    UnknownDocument,
    UnknownKind,
)

TASK_TYPES = ("crowd", "story_plot", "gpt3_plot", "gpt3_continuation")
HORIZONS = ("near", "far")

# Reconstruction caches a text snapshot every this many text-change events.
_CHECKPOINT_STRIDE = 64


@dataclass(frozen=True)
class OpComponent:
    """Exactly one of retain/insert/delete. Zero counts and empty inserts
    are legal no-ops."""

    retain: Optional[int] = None
    insert: Optional[str] = None
    delete: Optional[int] = None

    def __post_init__(self):
        present = [v for v in (self.retain, self.insert, self.delete) if v is not None]
        if len(present) != 1:
            raise ValueError("component must set exactly one of retain/insert/delete")
        if self.retain is not None and self.retain < 0:
            raise ValueError("retain count must be >= 0")
        if self.delete is not None and self.delete < 0:
            raise ValueError("delete count must be >= 0")


def retain(n: int) -> OpComponent:
    return OpComponent(retain=n)


def insert(text: str) -> OpComponent:
    return OpComponent(insert=text)


def delete(n: int) -> OpComponent:
    return OpComponent(delete=n)


@dataclass(frozen=True)
class Delta:
    components: tuple[OpComponent, ...]

    def consumed(self) -> int:
        """Code points of existing text this delta retains or deletes."""
        return sum(
            (c.retain or 0) + (c.delete or 0) for c in self.components
        )

    def inserted(self) -> int:
        return sum(len(c.insert) for c in self.components if c.insert is not None)

    def deleted(self) -> int:
        return sum(c.delete or 0 for c in self.components)


@dataclass(frozen=True)
class TextChangeEvent:
    seq: int
    ts_ms: int
    doc_id: str
    delta: Delta


@dataclass(frozen=True)
class TaskCreatedEvent:
    seq: int
    ts_ms: int
    doc_id: str
    task_id: str
    task_type: str
    snippet_start: int
    snippet_len: int
    instruction: Optional[str] = None
    num_ideas: Optional[int] = None
    horizon: Optional[str] = None


@dataclass(frozen=True)
class SuggestionDeliveredEvent:
    seq: int
    ts_ms: int
    doc_id: str
    task_id: str
    suggestion_id: str
    tab_index: int
    text: str


@dataclass(frozen=True)
class SuggestionReadEvent:
    seq: int
    ts_ms: int
    doc_id: str
    suggestion_id: str


Event = Union[TextChangeEvent, TaskCreatedEvent, SuggestionDeliveredEvent, SuggestionReadEvent]


@dataclass(frozen=True)
class DocumentState:
    doc_id: str
    as_of_ms: float
    text: str


class EventLog:
    """Immutable, time-ordered view over parsed events with per-document
    and per-id indices. Safe to share across threads after construction."""

    def __init__(self, events: Iterable[Event]):
        self.events: tuple[Event, ...] = tuple(events)
        by_doc: dict[str, list[Event]] = {}
        tasks: dict[str, TaskCreatedEvent] = {}
        suggestions: dict[str, SuggestionDeliveredEvent] = {}
        for ev in self.events:
            by_doc.setdefault(ev.doc_id, []).append(ev)
            if isinstance(ev, TaskCreatedEvent):
                tasks[ev.task_id] = ev
            elif isinstance(ev, SuggestionDeliveredEvent):
                suggestions[ev.suggestion_id] = ev
        self._by_doc = {doc: tuple(evs) for doc, evs in by_doc.items()}
        self._text_changes = {
            doc: tuple(e for e in evs if isinstance(e, TextChangeEvent))
            for doc, evs in self._by_doc.items()
        }
        self.tasks = tasks
        self.suggestions = suggestions
        # doc -> list of texts after each _CHECKPOINT_STRIDE text changes;
        # built lazily, benign to race (idempotent assignment).
        self._checkpoints: dict[str, list[str]] = {}

    def __eq__(self, other) -> bool:
        return isinstance(other, EventLog) and self.events == other.events

    def __len__(self) -> int:
        return len(self.events)

    def doc_ids(self) -> list[str]:
        return sorted(self._by_doc)

    def events_for(self, doc_id: str) -> tuple[Event, ...]:
        if doc_id not in self._by_doc:
            raise UnknownDocument(doc_id)
        return self._by_doc[doc_id]

    def text_changes_for(self, doc_id: str) -> tuple[TextChangeEvent, ...]:
        if doc_id not in self._by_doc:
            raise UnknownDocument(doc_id)
        return self._text_changes[doc_id]

    def _checkpoints_for(self, doc_id: str) -> list[str]:
        cached = self._checkpoints.get(doc_id)
        if cached is not None:
            return cached
        texts = []
        text = ""
        for i, ev in enumerate(self.text_changes_for(doc_id)):
            text = apply_delta(text, ev.delta)
            if (i + 1) % _CHECKPOINT_STRIDE == 0:
                texts.append(text)
        self._checkpoints[doc_id] = texts
        return texts


def apply_delta(text: str, delta: Delta) -> str:
    """Apply retain/insert/delete components left to right.

    The cursor starts at 0; unconsumed trailing text is preserved.
    Raises SpanOverflow when the delta consumes more than ``len(text)``.
    """
    consumed = delta.consumed()
    if consumed > len(text):
        raise SpanOverflow(
            f"delta consumes {consumed} code points, document has {len(text)}"
        )
    parts = []
    cursor = 0
    for comp in delta.components:
        if comp.retain is not None:
            parts.append(text[cursor : cursor + comp.retain])
            cursor += comp.retain
        elif comp.insert is not None:
            parts.append(comp.insert)
        else:
            cursor += comp.delete
    parts.append(text[cursor:])
    return "".join(parts)


def reconstruct_at(log: EventLog, doc_id: str, t_ms: float) -> DocumentState:
    """Document text as of ``t_ms`` (inclusive bound: events at exactly
    ``t_ms`` are applied)."""
    changes = log.text_changes_for(doc_id)
    # Number of qualifying events (changes are sorted by (ts_ms, seq)).
    lo, hi = 0, len(changes)
    while lo < hi:
        mid = (lo + hi) // 2
        if changes[mid].ts_ms <= t_ms:
            lo = mid + 1
        else:
            hi = mid
    count = lo
    checkpoints = log._checkpoints_for(doc_id)
    base = min(count // _CHECKPOINT_STRIDE, len(checkpoints))
    text = checkpoints[base - 1] if base > 0 else ""
    for ev in changes[base * _CHECKPOINT_STRIDE : count]:
        text = apply_delta(text, ev.delta)
    return DocumentState(doc_id=doc_id, as_of_ms=t_ms, text=text)


def snapshot_pair(
    log: EventLog, doc_id: str, t_ms: float, window_s: float
) -> tuple[str, str]:
    """Document text at ``t_ms`` and at ``t_ms + window_s`` seconds later."""
    before = reconstruct_at(log, doc_id, t_ms)
    after = reconstruct_at(log, doc_id, t_ms + window_s * 1000.0)
    return before.text, after.text


# --- JSONL parsing and serialization ---------------------------------------

_KINDS = ("text_change", "task_created", "suggestion_delivered", "suggestion_read")


def _parse_component(raw, line_no: int) -> OpComponent:
    if not isinstance(raw, dict):
        raise MalformedRecord(line_no, "op component must be an object")
    keys = [k for k in ("retain", "insert", "delete") if k in raw]
    if len(keys) != 1:
        raise MalformedRecord(
            line_no, "op component must have exactly one of retain/insert/delete"
        )
    key = keys[0]
    value = raw[key]
    if key == "insert":
        if not isinstance(value, str):
            raise MalformedRecord(line_no, "insert text must be a string")
        return OpComponent(insert=value)
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedRecord(line_no, f"{key} count must be an integer")
    if value < 0:
        raise NegativeCount(line_no, f"{key} count is negative")
    # Formatting attributes on retain/delete components are discarded.
    return OpComponent(retain=value) if key == "retain" else OpComponent(delete=value)


def _require(record: dict, key: str, types, line_no: int):
    if key not in record:
        raise MalformedRecord(line_no, f"missing field {key!r}")
    value = record[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise MalformedRecord(line_no, f"field {key!r} has wrong type")
    return value


def _parse_record(record: dict, line_no: int) -> Event:
    seq = _require(record, "seq", int, line_no)
    ts_ms = _require(record, "ts_ms", int, line_no)
    doc_id = _require(record, "doc", str, line_no)
    if seq < 0 or ts_ms < 0:
        raise MalformedRecord(line_no, "seq and ts_ms must be non-negative")
    kind = _require(record, "kind", str, line_no)
    if kind not in _KINDS:
        raise UnknownKind(line_no, kind)

    if kind == "text_change":
        ops = _require(record, "ops", list, line_no)
        components = tuple(_parse_component(c, line_no) for c in ops)
        return TextChangeEvent(seq=seq, ts_ms=ts_ms, doc_id=doc_id, delta=Delta(components))

    if kind == "task_created":
        task_type = _require(record, "task_type", str, line_no)
        if task_type not in TASK_TYPES:
            raise MalformedRecord(line_no, f"unknown task_type {task_type!r}")
        snippet_start = _require(record, "snippet_start", int, line_no)
        snippet_len = _require(record, "snippet_len", int, line_no)
        if snippet_start < 0 or snippet_len < 0:
            raise NegativeCount(line_no, "snippet offsets must be >= 0")
        instruction = record.get("instruction")
        if instruction is not None and not isinstance(instruction, str):
            raise MalformedRecord(line_no, "instruction must be a string")
        num_ideas = record.get("num_ideas")
        if num_ideas is not None:
            if not isinstance(num_ideas, int) or isinstance(num_ideas, bool) or num_ideas < 1:
                raise MalformedRecord(line_no, "num_ideas must be a positive integer")
        horizon = record.get("horizon")
        if horizon is not None:
            if horizon not in HORIZONS:
                raise MalformedRecord(line_no, f"unknown horizon {horizon!r}")
            if task_type != "story_plot":
                raise MalformedRecord(line_no, "horizon is only valid for story_plot tasks")
        return TaskCreatedEvent(
            seq=seq,
            ts_ms=ts_ms,
            doc_id=doc_id,
            task_id=_require(record, "task_id", str, line_no),
            task_type=task_type,
            snippet_start=snippet_start,
            snippet_len=snippet_len,
            instruction=instruction,
            num_ideas=num_ideas,
            horizon=horizon,
        )

    if kind == "suggestion_delivered":
        tab_index = _require(record, "tab_index", int, line_no)
        if tab_index < 0:
            raise MalformedRecord(line_no, "tab_index must be >= 0")
        return SuggestionDeliveredEvent(
            seq=seq,
            ts_ms=ts_ms,
            doc_id=doc_id,
            task_id=_require(record, "task_id", str, line_no),
            suggestion_id=_require(record, "suggestion_id", str, line_no),
            tab_index=tab_index,
            text=_require(record, "text", str, line_no),
        )

    return SuggestionReadEvent(
        seq=seq,
        ts_ms=ts_ms,
        doc_id=doc_id,
        suggestion_id=_require(record, "suggestion_id", str, line_no),
    )


def _check_references(events: Iterable[Event]) -> None:
    task_ids = {e.task_id for e in events if isinstance(e, TaskCreatedEvent)}
    suggestion_ids = set()
    for ev in events:
        if isinstance(ev, SuggestionDeliveredEvent):
            if ev.task_id not in task_ids:
                raise DanglingReference(ev.task_id, "suggestion_delivered references unknown task")
            suggestion_ids.add(ev.suggestion_id)
    for ev in events:
        if isinstance(ev, SuggestionReadEvent) and ev.suggestion_id not in suggestion_ids:
            raise DanglingReference(
                ev.suggestion_id, "suggestion_read references undelivered suggestion"
            )


def parse_event_log(data: Union[bytes, str]) -> EventLog:
    """Parse JSONL bytes/text into an EventLog.

    Events are stable-sorted by (ts_ms, seq); duplicate (ts_ms, seq) pairs,
    schema violations and dangling references are rejected. Unknown
    top-level record fields are ignored.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    events = []
    seen_keys = set()
    for line_no, line in enumerate(data.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise MalformedRecord(line_no, "record must be a JSON object")
        ev = _parse_record(record, line_no)
        key = (ev.ts_ms, ev.seq)
        if key in seen_keys:
            raise MalformedRecord(line_no, f"duplicate (ts_ms, seq) pair {key}")
        seen_keys.add(key)
        events.append(ev)
    events.sort(key=lambda e: (e.ts_ms, e.seq))
    _check_references(events)
    return EventLog(events)


def _component_to_json(comp: OpComponent) -> dict:
    if comp.retain is not None:
        return {"retain": comp.retain}
    if comp.insert is not None:
        return {"insert": comp.insert}
    return {"delete": comp.delete}


def event_to_record(ev: Event) -> dict:
    base = {"seq": ev.seq, "ts_ms": ev.ts_ms, "doc": ev.doc_id}
    if isinstance(ev, TextChangeEvent):
        base["kind"] = "text_change"
        base["ops"] = [_component_to_json(c) for c in ev.delta.components]
    elif isinstance(ev, TaskCreatedEvent):
        base["kind"] = "task_created"
        base["task_id"] = ev.task_id
        base["task_type"] = ev.task_type
        base["snippet_start"] = ev.snippet_start
        base["snippet_len"] = ev.snippet_len
        if ev.instruction is not None:
            base["instruction"] = ev.instruction
        if ev.num_ideas is not None:
            base["num_ideas"] = ev.num_ideas
        if ev.horizon is not None:
            base["horizon"] = ev.horizon
    elif isinstance(ev, SuggestionDeliveredEvent):
        base["kind"] = "suggestion_delivered"
        base["task_id"] = ev.task_id
        base["suggestion_id"] = ev.suggestion_id
        base["tab_index"] = ev.tab_index
        base["text"] = ev.text
    else:
        base["kind"] = "suggestion_read"
        base["suggestion_id"] = ev.suggestion_id
    return base


def serialize_event_log(log: EventLog) -> str:
    """Canonical JSONL serialization; parse(serialize(log)) == log."""
    lines = [
        json.dumps(event_to_record(ev), ensure_ascii=False, separators=(",", ":"))
        for ev in log.events
    ]
    return "\n".join(lines) + ("\n" if lines else "")


class EventLogBuilder:
    """Single ordered writer: collects timestamped proto-events, then
    ``build()`` sorts by (ts_ms, insertion order) and assigns seq."""

    def __init__(self):
        self._events: list[Event] = []
        self._delivered: dict[str, int] = {}

    def add_text_change(self, ts_ms: int, doc_id: str, components: Iterable[OpComponent]) -> None:
        self._events.append(
            TextChangeEvent(seq=-1, ts_ms=ts_ms, doc_id=doc_id, delta=Delta(tuple(components)))
        )

    def add_task_created(
        self,
        ts_ms: int,
        doc_id: str,
        task_id: str,
        task_type: str,
        snippet_start: int,
        snippet_len: int,
        instruction: Optional[str] = None,
        num_ideas: Optional[int] = None,
        horizon: Optional[str] = None,
    ) -> None:
        self._events.append(
            TaskCreatedEvent(
                seq=-1,
                ts_ms=ts_ms,
                doc_id=doc_id,
                task_id=task_id,
                task_type=task_type,
                snippet_start=snippet_start,
                snippet_len=snippet_len,
                instruction=instruction,
                num_ideas=num_ideas,
                horizon=horizon,
            )
        )

    def add_suggestion_delivered(
        self, ts_ms: int, doc_id: str, task_id: str, suggestion_id: str, tab_index: int, text: str
    ) -> None:
        self._delivered[task_id] = self._delivered.get(task_id, 0) + 1
        self._events.append(
            SuggestionDeliveredEvent(
                seq=-1,
                ts_ms=ts_ms,
                doc_id=doc_id,
                task_id=task_id,
                suggestion_id=suggestion_id,
                tab_index=tab_index,
                text=text,
            )
        )

    def add_suggestion_read(self, ts_ms: int, doc_id: str, suggestion_id: str) -> None:
        self._events.append(
            SuggestionReadEvent(seq=-1, ts_ms=ts_ms, doc_id=doc_id, suggestion_id=suggestion_id)
        )

    def delivered_count(self, task_id: str) -> int:
        return self._delivered.get(task_id, 0)

    def build(self) -> EventLog:
        ordered = sorted(
            enumerate(self._events), key=lambda pair: (pair[1].ts_ms, pair[0])
        )
        events = [replace(ev, seq=i) for i, (_, ev) in enumerate(ordered)]
        _check_references(events)
        return EventLog(events)
