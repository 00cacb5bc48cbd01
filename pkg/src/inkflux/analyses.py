"""Log analyses: usage and latency statistics, word-count progress against
simulated baselines, and suggestion-influence similarity scoring.

All functions are pure over an immutable EventLog; baseline simulations are
deterministic functions of (log, seed) because every run draws from its own
split of the seeded stream.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import NoSessions, NoSuggestions
from .oplog import (
    EventLog,
    SuggestionDeliveredEvent,
    SuggestionReadEvent,
    TaskCreatedEvent,
    TextChangeEvent,
    snapshot_pair,
)
from .sessionizer import WorkingSession, segment_sessions
from .stats import SeededRng, quantiles
from .textmetrics import (
    MetricBackends,
    Sentence,
    max_pairwise_influence,
    split_sentences,
    word_count,
)
from .oplog import TASK_TYPES

DEFAULT_WINDOW_S = 300.0
ALT_WINDOW_S = 180.0
DEFAULT_SESSION_THRESHOLD_S = 240.0


@dataclass(frozen=True)
class ReadEventRecord:
    """First read of a suggestion, joined with its delivery and creation."""

    suggestion_id: str
    task_id: str
    task_type: str
    doc_id: str
    read_ts_ms: int
    delivered_ts_ms: int
    created_ts_ms: int
    suggestion_text: str


def extract_read_events(log: EventLog) -> list[ReadEventRecord]:
    """One record per suggestion's first read; unread suggestions excluded."""
    first_read: dict[str, SuggestionReadEvent] = {}
    for ev in log.events:
        if isinstance(ev, SuggestionReadEvent) and ev.suggestion_id not in first_read:
            first_read[ev.suggestion_id] = ev
    records = []
    for ev in log.events:
        if not isinstance(ev, SuggestionDeliveredEvent):
            continue
        read = first_read.get(ev.suggestion_id)
        if read is None:
            continue
        task = log.tasks[ev.task_id]
        records.append(
            ReadEventRecord(
                suggestion_id=ev.suggestion_id,
                task_id=ev.task_id,
                task_type=task.task_type,
                doc_id=ev.doc_id,
                read_ts_ms=read.ts_ms,
                delivered_ts_ms=ev.ts_ms,
                created_ts_ms=task.ts_ms,
                suggestion_text=ev.text,
            )
        )
    return records


def activity_timestamps(log: EventLog, doc_id: Optional[str] = None) -> list[int]:
    """Timestamps of activity events (text changes and suggestion reads),
    optionally restricted to one document."""
    events = log.events if doc_id is None else log.events_for(doc_id)
    return [
        ev.ts_ms
        for ev in events
        if isinstance(ev, (TextChangeEvent, SuggestionReadEvent))
    ]


def working_sessions(
    log: EventLog,
    threshold_s: float = DEFAULT_SESSION_THRESHOLD_S,
    pooled: bool = False,
) -> list[WorkingSession]:
    """Sessions per document (default) or over the merged activity stream."""
    if pooled:
        return segment_sessions(activity_timestamps(log), threshold_s, doc_id="*")
    sessions = []
    for doc_id in log.doc_ids():
        sessions.extend(
            segment_sessions(activity_timestamps(log, doc_id), threshold_s, doc_id=doc_id)
        )
    return sessions


# --- RQ1: latency and usage ---------------------------------------------------


@dataclass(frozen=True)
class LatencyStats:
    samples: int
    q25_s: Optional[float]
    q50_s: Optional[float]
    q75_s: Optional[float]


@dataclass(frozen=True)
class TaskTypeLatency:
    task_type: str
    system: LatencyStats
    reading: LatencyStats
    delivered: int
    read: int
    not_read_rate: Optional[float]


@dataclass(frozen=True)
class LatencyReport:
    by_type: tuple[TaskTypeLatency, ...]

    def for_type(self, task_type: str) -> TaskTypeLatency:
        for row in self.by_type:
            if row.task_type == task_type:
                return row
        raise KeyError(task_type)


def _latency_stats(values_s: list[float]) -> LatencyStats:
    if not values_s:
        return LatencyStats(samples=0, q25_s=None, q50_s=None, q75_s=None)
    q25, q50, q75 = quantiles(values_s, [0.25, 0.50, 0.75])
    return LatencyStats(samples=len(values_s), q25_s=q25, q50_s=q50, q75_s=q75)


def latency_report(log: EventLog) -> LatencyReport:
    """System latency (creation to first delivery, per task) and reading
    latency (delivery to first read, per suggestion), with not-read rates."""
    first_delivery: dict[str, SuggestionDeliveredEvent] = {}
    first_read_ts: dict[str, int] = {}
    delivered_by_type: dict[str, int] = {t: 0 for t in TASK_TYPES}
    read_by_type: dict[str, int] = {t: 0 for t in TASK_TYPES}
    reading_by_type: dict[str, list[float]] = {t: [] for t in TASK_TYPES}
    for ev in log.events:
        if isinstance(ev, SuggestionDeliveredEvent):
            first_delivery.setdefault(ev.task_id, ev)
            delivered_by_type[log.tasks[ev.task_id].task_type] += 1
        elif isinstance(ev, SuggestionReadEvent) and ev.suggestion_id not in first_read_ts:
            first_read_ts[ev.suggestion_id] = ev.ts_ms
            delivery = log.suggestions[ev.suggestion_id]
            task_type = log.tasks[delivery.task_id].task_type
            read_by_type[task_type] += 1
            reading_by_type[task_type].append((ev.ts_ms - delivery.ts_ms) / 1000.0)

    system_by_type: dict[str, list[float]] = {t: [] for t in TASK_TYPES}
    for task_id, delivery in first_delivery.items():
        task = log.tasks[task_id]
        system_by_type[task.task_type].append((delivery.ts_ms - task.ts_ms) / 1000.0)

    rows = []
    for task_type in TASK_TYPES:
        delivered = delivered_by_type[task_type]
        read = read_by_type[task_type]
        rate = (delivered - read) / delivered if delivered else None
        rows.append(
            TaskTypeLatency(
                task_type=task_type,
                system=_latency_stats(system_by_type[task_type]),
                reading=_latency_stats(reading_by_type[task_type]),
                delivered=delivered,
                read=read,
                not_read_rate=rate,
            )
        )
    return LatencyReport(by_type=tuple(rows))


@dataclass(frozen=True)
class UsagePhase:
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def proportions(self) -> dict[str, float]:
        total = self.total
        if total == 0:
            return {t: 0.0 for t in TASK_TYPES}
        return {t: self.counts.get(t, 0) / total for t in TASK_TYPES}


@dataclass(frozen=True)
class UsageTrend:
    k: int
    phases: tuple[UsagePhase, ...]
    totals: dict[str, int]


def _phase_sizes(n: int, k: int) -> list[int]:
    base, rem = divmod(n, k)
    return [base + 1 if i < rem else base for i in range(k)]


def usage_trend(log: EventLog, k: int = 4, per_doc: bool = False) -> UsageTrend:
    """Split the time-ordered request stream into k near-equal contiguous
    phases and report per-phase task-type mix.

    ``per_doc`` phases each document's requests separately before summing
    phase counts, mirroring a per-participant reading of the trend.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    requests = [ev for ev in log.events if isinstance(ev, TaskCreatedEvent)]
    counts = [dict.fromkeys(TASK_TYPES, 0) for _ in range(k)]
    groups = (
        [[r for r in requests if r.doc_id == doc] for doc in log.doc_ids()]
        if per_doc
        else [requests]
    )
    for group in groups:
        sizes = _phase_sizes(len(group), k)
        idx = 0
        for phase, size in enumerate(sizes):
            for r in group[idx : idx + size]:
                counts[phase][r.task_type] += 1
            idx += size
    totals = dict.fromkeys(TASK_TYPES, 0)
    for r in requests:
        totals[r.task_type] += 1
    phases = tuple(UsagePhase(counts=c) for c in counts)
    return UsageTrend(k=k, phases=phases, totals=totals)


# --- RQ2: progress ------------------------------------------------------------


@dataclass(frozen=True)
class ProgressSample:
    record: ReadEventRecord
    window_s: float
    word_delta: int


@dataclass(frozen=True)
class BaselineConfig:
    n_runs: int = 1000
    window_s: float = DEFAULT_WINDOW_S
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")


def progress_samples(log: EventLog, window_s: float = DEFAULT_WINDOW_S) -> list[ProgressSample]:
    """Word-count change from each suggestion read to window_s later."""
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    samples = []
    for record in extract_read_events(log):
        before, after = snapshot_pair(log, record.doc_id, record.read_ts_ms, window_s)
        samples.append(
            ProgressSample(
                record=record,
                window_s=window_s,
                word_delta=word_count(after) - word_count(before),
            )
        )
    return samples


def sample_session_times(
    sessions: Sequence[WorkingSession], n_runs: int, rng: SeededRng
) -> list[tuple[WorkingSession, float, SeededRng]]:
    """Duration-weighted session choice plus a uniform time within it.

    Each run draws from its own split of ``rng`` (so serial and parallel
    execution agree); the run's stream is returned for callers that need
    further draws tied to the same run.
    """
    weighted = [s for s in sessions if s.duration_ms > 0]
    if not weighted:
        raise NoSessions("no session with positive duration")
    durations = [float(s.duration_ms) for s in weighted]
    draws = []
    for run in range(n_runs):
        run_rng = rng.split(run)
        session = weighted[run_rng.weighted_index(durations)]
        t = run_rng.uniform(float(session.start_ms), float(session.end_ms))
        draws.append((session, t, run_rng))
    return draws


def baseline_progress(
    log: EventLog, config: BaselineConfig, sessions: Sequence[WorkingSession]
) -> list[int]:
    """Monte-Carlo word deltas at random in-session times."""
    rng = SeededRng(config.rng_seed)
    deltas = []
    for session, t, _ in sample_session_times(sessions, config.n_runs, rng):
        before, after = snapshot_pair(log, session.doc_id, t, config.window_s)
        deltas.append(word_count(after) - word_count(before))
    return deltas


# --- RQ3: influence -----------------------------------------------------------


def newly_edited(text_before: str, text_after: str) -> list[Sentence]:
    """Sentences of the after-text with no exact (trimmed) match among the
    before-text sentences; covers both added and edited sentences."""
    before = {s.text for s in split_sentences(text_before)}
    return [s for s in split_sentences(text_after) if s.text not in before]


@dataclass(frozen=True)
class InfluenceSample:
    record: ReadEventRecord
    metric: str
    score: Optional[float]


@dataclass(frozen=True)
class InfluenceResult:
    samples: tuple[InfluenceSample, ...]
    excluded: int

    def scores(self) -> list[float]:
        return [s.score for s in self.samples if s.score is not None]


def influence_samples(
    log: EventLog,
    window_s: float = DEFAULT_WINDOW_S,
    metric: str = "edit",
    backends: Optional[MetricBackends] = None,
) -> InfluenceResult:
    """Max-pooled similarity between each read suggestion's sentences and
    the newly-edited sentences in its window; empty sides are excluded."""
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    samples = []
    excluded = 0
    for record in extract_read_events(log):
        suggestion_sentences = [s.text for s in split_sentences(record.suggestion_text)]
        before, after = snapshot_pair(log, record.doc_id, record.read_ts_ms, window_s)
        new_sentences = [s.text for s in newly_edited(before, after)]
        score = max_pairwise_influence(metric, suggestion_sentences, new_sentences, backends)
        if score is None:
            excluded += 1
        samples.append(InfluenceSample(record=record, metric=metric, score=score))
    return InfluenceResult(samples=tuple(samples), excluded=excluded)


@dataclass(frozen=True)
class BaselineInfluenceResult:
    scores: tuple[float, ...]
    excluded: int


def baseline_influence(
    log: EventLog,
    config: BaselineConfig,
    sessions: Sequence[WorkingSession],
    metric: str = "edit",
    backends: Optional[MetricBackends] = None,
) -> BaselineInfluenceResult:
    """Monte-Carlo influence of a random same-document suggestion on the
    newly-edited content at a random in-session time."""
    suggestions_by_doc: dict[str, list[SuggestionDeliveredEvent]] = {}
    for ev in log.events:
        if isinstance(ev, SuggestionDeliveredEvent):
            suggestions_by_doc.setdefault(ev.doc_id, []).append(ev)
    candidate_sessions = [s for s in sessions if suggestions_by_doc.get(s.doc_id)]
    if not candidate_sessions:
        raise NoSuggestions("no session belongs to a document with delivered suggestions")
    rng = SeededRng(config.rng_seed)
    scores = []
    excluded = 0
    for session, t, run_rng in sample_session_times(candidate_sessions, config.n_runs, rng):
        before, after = snapshot_pair(log, session.doc_id, t, config.window_s)
        new_sentences = [s.text for s in newly_edited(before, after)]
        pool = suggestions_by_doc[session.doc_id]
        suggestion = pool[run_rng.next_int(len(pool))]
        suggestion_sentences = [s.text for s in split_sentences(suggestion.text)]
        score = max_pairwise_influence(metric, suggestion_sentences, new_sentences, backends)
        if score is None:
            excluded += 1
        else:
            scores.append(score)
    return BaselineInfluenceResult(scores=tuple(scores), excluded=excluded)
