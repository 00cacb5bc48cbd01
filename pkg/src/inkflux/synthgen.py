"""Synthetic event-log generator with planted ground truth.

Worlds are built from seeded streams: typing realized as word-at-a-time
insert deltas grouped into sessions, suggestion lifecycles placed inside
sessions, and optional adoption events (verbatim or paraphrased pastes of a
suggestion sentence) inserted at typed-sentence boundaries so downstream
segmentation sees them as standalone sentences.

The returned GroundTruth records planted sessions, read events, adoptions
and expected per-read word progress, and is validated against the emitted
log before returning.
"""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import Optional

from . import wordlists
from .errors import InvalidConfig
from .oplog import (
    TASK_TYPES,
    EventLog,
    EventLogBuilder,
    insert,
    reconstruct_at,
    retain,
)
from .stats import SeededRng
from .textmetrics import lexical_cosine, word_count


@dataclass(frozen=True)
class GapDist:
    """base + Exp(mean) seconds, optionally capped on the total."""

    base_s: float = 0.0
    mean_s: float = 0.0
    cap_s: Optional[float] = None

    def draw_s(self, rng: SeededRng) -> float:
        gap = self.base_s
        if self.mean_s > 0:
            gap += rng.next_exponential(self.mean_s)
        if self.cap_s is not None:
            gap = min(gap, self.cap_s)
        return gap

    def validate(self, name: str) -> None:
        if self.base_s < 0 or self.mean_s < 0:
            raise InvalidConfig(f"{name}: negative gap parameters")
        if self.cap_s is not None and self.cap_s < self.base_s:
            raise InvalidConfig(f"{name}: cap below base")

    @staticmethod
    def from_dict(d: dict) -> "GapDist":
        return GapDist(
            base_s=float(d.get("base_s", 0.0)),
            mean_s=float(d.get("mean_s", 0.0)),
            cap_s=float(d["cap_s"]) if d.get("cap_s") is not None else None,
        )

    def to_dict(self) -> dict:
        d = {"base_s": self.base_s, "mean_s": self.mean_s}
        if self.cap_s is not None:
            d["cap_s"] = self.cap_s
        return d


ADOPTION_KINDS = ("none", "verbatim", "paraphrase")


@dataclass(frozen=True)
class AdoptionPlan:
    kind: str = "none"
    strength: float = 0.6  # paraphrase: fraction of suggestion tokens kept
    delay_s: float = 30.0  # paste delay after the read event

    @staticmethod
    def from_dict(d: dict) -> "AdoptionPlan":
        return AdoptionPlan(
            kind=d.get("kind", "none"),
            strength=float(d.get("strength", 0.6)),
            delay_s=float(d.get("delay_s", 30.0)),
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, "strength": self.strength, "delay_s": self.delay_s}


@dataclass(frozen=True)
class SuggestionPlan:
    task_type: str = "gpt3_continuation"
    latency_s: GapDist = field(default_factory=lambda: GapDist(base_s=5.0, mean_s=3.0))
    read_delay_s: GapDist = field(default_factory=lambda: GapDist(base_s=2.0, mean_s=10.0))
    n_sentences: int = 2
    adoption: AdoptionPlan = field(default_factory=AdoptionPlan)

    @staticmethod
    def from_dict(d: dict) -> "SuggestionPlan":
        return SuggestionPlan(
            task_type=d.get("task_type", "gpt3_continuation"),
            latency_s=GapDist.from_dict(d.get("latency_s", {"base_s": 5.0, "mean_s": 3.0})),
            read_delay_s=GapDist.from_dict(d.get("read_delay_s", {"base_s": 2.0, "mean_s": 10.0})),
            n_sentences=int(d.get("n_sentences", 2)),
            adoption=AdoptionPlan.from_dict(d.get("adoption", {})),
        )

    def to_dict(self) -> dict:
        return {
            "task_type": self.task_type,
            "latency_s": self.latency_s.to_dict(),
            "read_delay_s": self.read_delay_s.to_dict(),
            "n_sentences": self.n_sentences,
            "adoption": self.adoption.to_dict(),
        }


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    doc_id: str = "doc-1"
    start_ms: int = 3_600_000
    n_sessions: int = 8
    events_per_session: tuple[int, int] = (30, 60)
    within_gap_s: GapDist = field(default_factory=lambda: GapDist(mean_s=20.0))
    between_gap_s: GapDist = field(default_factory=lambda: GapDist(base_s=1800.0, mean_s=600.0))
    typing_words_per_min: Optional[float] = None  # overrides within_gap_s
    words_per_sentence: tuple[int, int] = (5, 9)
    read_margin_s: Optional[float] = None  # None: reads uniform in session
    window_s: float = 300.0
    suggestions: tuple[SuggestionPlan, ...] = ()
    typed_vocabulary: tuple[str, ...] = wordlists.TYPED_WORDS
    suggestion_vocabulary: tuple[str, ...] = wordlists.SUGGESTION_WORDS

    def validate(self) -> None:
        if self.n_sessions < 1:
            raise InvalidConfig("n_sessions must be >= 1")
        lo, hi = self.events_per_session
        if not 1 <= lo <= hi:
            raise InvalidConfig("events_per_session must satisfy 1 <= lo <= hi")
        wlo, whi = self.words_per_sentence
        if not 1 <= wlo <= whi:
            raise InvalidConfig("words_per_sentence must satisfy 1 <= lo <= hi")
        self.within_gap_s.validate("within_gap_s")
        self.between_gap_s.validate("between_gap_s")
        if self.typing_words_per_min is not None and self.typing_words_per_min <= 0:
            raise InvalidConfig("typing_words_per_min must be positive")
        # Session recovery needs between-gaps above any within-gap; with an
        # uncapped exponential this is only checkable on the base offsets.
        within_hi = self.within_gap_s.cap_s if self.within_gap_s.cap_s is not None else self.within_gap_s.base_s
        if self.between_gap_s.base_s <= within_hi:
            raise InvalidConfig("between_gap_s support must sit above within_gap_s")
        if self.window_s <= 0:
            raise InvalidConfig("window_s must be positive")
        if not self.typed_vocabulary or not self.suggestion_vocabulary:
            raise InvalidConfig("vocabularies must be non-empty")
        for plan in self.suggestions:
            if plan.task_type not in TASK_TYPES:
                raise InvalidConfig(f"unknown task_type {plan.task_type!r}")
            plan.latency_s.validate("latency_s")
            plan.read_delay_s.validate("read_delay_s")
            if plan.n_sentences < 1:
                raise InvalidConfig("n_sentences must be >= 1")
            if plan.adoption.kind not in ADOPTION_KINDS:
                raise InvalidConfig(f"unknown adoption kind {plan.adoption.kind!r}")
            if plan.adoption.kind == "paraphrase" and not 0.0 < plan.adoption.strength <= 1.0:
                raise InvalidConfig("paraphrase strength must be in (0, 1]")
            if plan.adoption.kind != "none" and plan.adoption.delay_s >= self.window_s:
                raise InvalidConfig("adoption delay must fall inside the analysis window")

    @staticmethod
    def from_dict(d: dict) -> "SynthConfig":
        try:
            cfg = SynthConfig(
                seed=int(d.get("seed", 0)),
                doc_id=str(d.get("doc_id", "doc-1")),
                start_ms=int(d.get("start_ms", 3_600_000)),
                n_sessions=int(d.get("n_sessions", 8)),
                events_per_session=tuple(d.get("events_per_session", (30, 60))),
                within_gap_s=GapDist.from_dict(d.get("within_gap_s", {"mean_s": 20.0})),
                between_gap_s=GapDist.from_dict(
                    d.get("between_gap_s", {"base_s": 1800.0, "mean_s": 600.0})
                ),
                typing_words_per_min=(
                    float(d["typing_words_per_min"])
                    if d.get("typing_words_per_min") is not None
                    else None
                ),
                words_per_sentence=tuple(d.get("words_per_sentence", (5, 9))),
                read_margin_s=(
                    float(d["read_margin_s"]) if d.get("read_margin_s") is not None else None
                ),
                window_s=float(d.get("window_s", 300.0)),
                suggestions=tuple(
                    SuggestionPlan.from_dict(p) for p in d.get("suggestions", [])
                ),
                typed_vocabulary=tuple(d.get("typed_vocabulary", wordlists.TYPED_WORDS)),
                suggestion_vocabulary=tuple(
                    d.get("suggestion_vocabulary", wordlists.SUGGESTION_WORDS)
                ),
            )
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad generator config: {exc}") from exc
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class PlantedSession:
    doc_id: str
    start_ms: int
    end_ms: int
    typing_events: int


@dataclass(frozen=True)
class PlantedRead:
    suggestion_id: str
    task_id: str
    task_type: str
    created_ts_ms: int
    delivered_ts_ms: int
    read_ts_ms: int
    suggestion_text: str


@dataclass(frozen=True)
class PlantedAdoption:
    suggestion_id: str
    kind: str
    source_sentence: str
    pasted_sentence: str
    paste_ts_ms: int
    lexical_cosine: float


@dataclass(frozen=True)
class GroundTruth:
    window_s: float
    sessions: tuple[PlantedSession, ...]
    reads: tuple[PlantedRead, ...]
    adoptions: tuple[PlantedAdoption, ...]
    expected_progress: dict[str, int]  # suggestion_id -> word delta in window

    def to_dict(self) -> dict:
        return {
            "window_s": self.window_s,
            "sessions": [vars(s) for s in self.sessions],
            "reads": [vars(r) for r in self.reads],
            "adoptions": [vars(a) for a in self.adoptions],
            "expected_progress": self.expected_progress,
        }

    @staticmethod
    def from_dict(d: dict) -> "GroundTruth":
        return GroundTruth(
            window_s=float(d["window_s"]),
            sessions=tuple(PlantedSession(**s) for s in d["sessions"]),
            reads=tuple(PlantedRead(**r) for r in d["reads"]),
            adoptions=tuple(PlantedAdoption(**a) for a in d["adoptions"]),
            expected_progress={k: int(v) for k, v in d["expected_progress"].items()},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"


class SentenceTyper:
    """Yields per-word chunks forming capitalized, period-ended sentences."""

    def __init__(self, words: tuple[str, ...], words_per_sentence: tuple[int, int], rng: SeededRng):
        self._words = words
        self._bounds = words_per_sentence
        self._rng = rng
        self._remaining = 0

    def next_chunk(self) -> str:
        starting = self._remaining == 0
        if starting:
            self._remaining = self._rng.int_between(*self._bounds)
        word = self._words[self._rng.next_int(len(self._words))]
        if starting:
            word = word.capitalize()
        self._remaining -= 1
        return word + (". " if self._remaining == 0 else " ")


def _make_suggestion_text(
    vocab: tuple[str, ...], n_sentences: int, words_per_sentence: tuple[int, int], rng: SeededRng
) -> str:
    """Sentences whose words are all distinct within the suggestion."""
    pool = rng.shuffled(vocab)
    needed = n_sentences * words_per_sentence[1]
    if needed > len(pool):
        raise InvalidConfig("suggestion vocabulary too small for requested sentences")
    sentences = []
    idx = 0
    for _ in range(n_sentences):
        n_words = rng.int_between(*words_per_sentence)
        words = pool[idx : idx + n_words]
        idx += n_words
        sentences.append(" ".join([words[0].capitalize()] + words[1:]) + ".")
    return " ".join(sentences)


def _paraphrase_sentence(source_sentence: str, strength: float) -> str:
    """Keep the first round(strength*k) of k tokens, replace the rest with
    fresh out-of-vocabulary words."""
    words = source_sentence.rstrip(".").split(" ")
    k = len(words)
    keep = min(k, max(1, round(strength * k)))
    fresh = list(wordlists.FRESH_WORDS)
    replaced = [fresh[i % len(fresh)] for i in range(k - keep)]
    out = words[:keep] + replaced
    out[0] = out[0].capitalize()
    return " ".join(out) + "."


def generate_log(config: SynthConfig) -> tuple[EventLog, GroundTruth]:
    """Deterministic world generation; see module docstring."""
    config.validate()
    rng_gaps = SeededRng(config.seed).split(0)
    rng_typing = SeededRng(config.seed).split(1)
    rng_plans = SeededRng(config.seed).split(2)

    if config.typing_words_per_min is not None:
        word_gap_ms = max(1, round(60000.0 / config.typing_words_per_min))
        draw_gap_ms = lambda: word_gap_ms
    else:
        draw_gap_ms = lambda: max(1, round(config.within_gap_s.draw_s(rng_gaps) * 1000.0))

    typer = SentenceTyper(config.typed_vocabulary, config.words_per_sentence, rng_typing)

    # Typing schedule: (ts, chunk) plus planted session spans.
    word_events: list[tuple[int, str]] = []
    sessions: list[PlantedSession] = []
    t = config.start_ms
    for _ in range(config.n_sessions):
        n_events = rng_gaps.int_between(*config.events_per_session)
        start = t
        for i in range(n_events):
            if i > 0:
                t += draw_gap_ms()
            word_events.append((t, typer.next_chunk()))
        sessions.append(
            PlantedSession(
                doc_id=config.doc_id, start_ms=start, end_ms=t, typing_events=n_events
            )
        )
        t += max(1, round(config.between_gap_s.draw_s(rng_gaps) * 1000.0))

    word_times = [ts for ts, _ in word_events]

    # Suggestion lifecycles: read times placed inside sessions the same way
    # the baseline sampler draws times (duration-weighted, then uniform).
    durations = [max(s.end_ms - s.start_ms, 0) for s in sessions]
    has_duration = any(d > 0 for d in durations)
    reads: list[PlantedRead] = []
    adoptions: list[PlantedAdoption] = []
    paste_events: list[tuple[int, str]] = []  # (ts, sentence text without spacing)
    for i, plan in enumerate(config.suggestions):
        plan_rng = rng_plans.split(i)
        if has_duration:
            session = sessions[plan_rng.weighted_index(durations)]
        else:
            session = sessions[plan_rng.next_int(len(sessions))]
        if config.read_margin_s is not None:
            hi = max(session.start_ms, session.end_ms - round(config.read_margin_s * 1000.0))
        else:
            hi = session.end_ms
        read_ts = round(plan_rng.uniform(float(session.start_ms), float(hi)))
        delivered_ts = max(0, read_ts - round(plan.read_delay_s.draw_s(plan_rng) * 1000.0))
        created_ts = max(0, delivered_ts - round(plan.latency_s.draw_s(plan_rng) * 1000.0))
        text = _make_suggestion_text(
            config.suggestion_vocabulary, plan.n_sentences, config.words_per_sentence, plan_rng
        )
        suggestion_id = f"s{i:03d}"
        reads.append(
            PlantedRead(
                suggestion_id=suggestion_id,
                task_id=f"t{i:03d}",
                task_type=plan.task_type,
                created_ts_ms=created_ts,
                delivered_ts_ms=delivered_ts,
                read_ts_ms=read_ts,
                suggestion_text=text,
            )
        )
        if plan.adoption.kind != "none":
            source = text.split(". ")[0]
            if not source.endswith("."):
                source += "."
            if plan.adoption.kind == "verbatim":
                pasted = source
                cosine = lexical_cosine(source, pasted)
            else:
                pasted = _paraphrase_sentence(source, plan.adoption.strength)
                cosine = lexical_cosine(source, pasted)
            paste_ts = read_ts + round(plan.adoption.delay_s * 1000.0)
            paste_events.append((paste_ts, pasted))
            adoptions.append(
                PlantedAdoption(
                    suggestion_id=suggestion_id,
                    kind=plan.adoption.kind,
                    source_sentence=source,
                    pasted_sentence=pasted,
                    paste_ts_ms=paste_ts,
                    lexical_cosine=cosine,
                )
            )

    # Assemble deltas in time order, tracking document length and the offset
    # just past the last completed typed sentence (pastes insert there so
    # they stay standalone sentences).
    builder = EventLogBuilder()
    merged = [(ts, "type", chunk) for ts, chunk in word_events] + [
        (ts, "paste", sentence) for ts, sentence in paste_events
    ]
    merged.sort(key=lambda item: (item[0], 0 if item[1] == "type" else 1))
    doc_len = 0
    boundary = 0  # insertion offset for pastes
    expected_words_at: list[tuple[int, int]] = []  # (ts, words added)
    for ts, kind, payload in merged:
        if kind == "type":
            builder.add_text_change(ts, config.doc_id, [retain(doc_len), insert(payload)])
            doc_len += len(payload)
            if payload.endswith(". "):
                boundary = doc_len
            expected_words_at.append((ts, 1))
        else:
            chunk = payload + " "
            builder.add_text_change(ts, config.doc_id, [retain(boundary), insert(chunk)])
            doc_len += len(chunk)
            boundary += len(chunk)
            expected_words_at.append((ts, word_count(chunk)))

    for read in reads:
        len_at_created = bisect.bisect_right(word_times, read.created_ts_ms)
        builder.add_task_created(
            read.created_ts_ms,
            config.doc_id,
            task_id=read.task_id,
            task_type=read.task_type,
            snippet_start=0,
            snippet_len=min(120, len_at_created),
            num_ideas=3 if read.task_type == "crowd" else None,
            horizon="near" if read.task_type == "story_plot" else None,
        )
        builder.add_suggestion_delivered(
            read.delivered_ts_ms,
            config.doc_id,
            task_id=read.task_id,
            suggestion_id=read.suggestion_id,
            tab_index=0,
            text=read.suggestion_text,
        )
        builder.add_suggestion_read(read.read_ts_ms, config.doc_id, read.suggestion_id)

    log = builder.build()

    window_ms = config.window_s * 1000.0
    expected_progress = {}
    for read in reads:
        expected_progress[read.suggestion_id] = sum(
            words
            for ts, words in expected_words_at
            if read.read_ts_ms < ts <= read.read_ts_ms + window_ms
        )

    truth = GroundTruth(
        window_s=config.window_s,
        sessions=tuple(sessions),
        reads=tuple(reads),
        adoptions=tuple(adoptions),
        expected_progress=expected_progress,
    )
    _validate_truth(log, truth, config)
    return log, truth


def _validate_truth(log: EventLog, truth: GroundTruth, config: SynthConfig) -> None:
    for adoption in truth.adoptions:
        at_paste = reconstruct_at(log, config.doc_id, adoption.paste_ts_ms).text
        just_before = reconstruct_at(log, config.doc_id, adoption.paste_ts_ms - 1).text
        if adoption.pasted_sentence not in at_paste:
            raise InvalidConfig("planted adoption missing from document at paste time")
        if adoption.pasted_sentence in just_before:
            raise InvalidConfig("planted adoption present before paste time")
