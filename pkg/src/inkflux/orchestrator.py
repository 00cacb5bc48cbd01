"""Headless suggestion-task engine: task creation, cost estimation, prompt
rendering, provider dispatch, and a scripted simulation runner that emits
full event logs under a virtual clock.

Providers are pluggable per task type. Simulated providers draw latencies
and texts from seeded streams; the remote completion provider posts to an
HTTP endpoint and reports measured wall latency.
"""
from __future__ import annotations

import heapq
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol

import httpx

from . import wordlists
from .errors import (
    EmptySnippet,
    InvalidConfig,
    InvalidParams,
    NoProvider,
    ProviderFailure,
)
from .oplog import HORIZONS, TASK_TYPES, EventLog, EventLogBuilder, insert, retain
from .stats import SeededRng
from .synthgen import GapDist, SentenceTyper
from .textmetrics import word_count

logger = logging.getLogger(__name__)

API_KEY_ENV = "INKFLUX_API_KEY"
DEFAULT_COMPLETION_MODEL = "text-davanci-003"
DEFAULT_COMPLETION_MAX_TOKENS = 100
DEFAULT_COMPLETION_TEMPERATURE = 0.8

# Standard normal 75th percentile; quartile ratios of a lognormal span
# exp(2 * this * sigma).
_PHI_INV_75 = 0.674489750196082


class Clock(Protocol):
    def now_ms(self) -> int: ...


class VirtualClock:
    """Monotone simulated clock; a week of latency replays instantly."""

    def __init__(self, start_ms: int = 0):
        self._now_ms = start_ms

    def now_ms(self) -> int:
        return self._now_ms

    def advance(self, delta_ms: int) -> None:
        if delta_ms < 0:
            raise ValueError("clock cannot move backwards")
        self._now_ms += delta_ms

    def advance_to(self, ts_ms: int) -> None:
        if ts_ms < self._now_ms:
            raise ValueError("clock cannot move backwards")
        self._now_ms = ts_ms


class WallClock:
    def now_ms(self) -> int:
        return int(time.time() * 1000)


@dataclass(frozen=True)
class SuggestionTask:
    task_id: str
    doc_id: str
    task_type: str
    snippet_text: str
    snippet_start: int
    snippet_len: int
    created_ts_ms: int
    instruction: Optional[str] = None
    num_ideas: Optional[int] = None
    horizon: Optional[str] = None


@dataclass(frozen=True)
class Suggestion:
    suggestion_id: str
    task_id: str
    tab_index: int
    text: str
    latency_s: float
    delivered_ts_ms: int


class SuggestionProvider(Protocol):
    """Returns one (latency_s, text) pair per generated idea."""

    def generate(self, task: SuggestionTask, rng: SeededRng) -> list[tuple[float, str]]: ...


def create_task(
    doc_id: str,
    snippet_text: str,
    task_type: str,
    clock: Clock,
    builder: EventLogBuilder,
    snippet_start: int = 0,
    instruction: Optional[str] = None,
    num_ideas: Optional[int] = None,
    horizon: Optional[str] = None,
    task_id: Optional[str] = None,
) -> SuggestionTask:
    """Validate parameters, fill defaults, and append a task_created event."""
    if snippet_text == "":
        raise EmptySnippet("suggestion tasks need a non-empty snippet")
    if task_type not in TASK_TYPES:
        raise InvalidParams(f"unknown task type {task_type!r}")
    if horizon is not None and task_type != "story_plot":
        raise InvalidParams("horizon is only valid for story_plot tasks")
    if task_type == "story_plot":
        if horizon not in HORIZONS:
            raise InvalidParams("story_plot tasks need horizon 'near' or 'far'")
    if num_ideas is not None and task_type != "crowd":
        raise InvalidParams("num_ideas is only valid for crowd tasks")
    if task_type == "crowd":
        num_ideas = 3 if num_ideas is None else num_ideas
        if num_ideas < 1:
            raise InvalidParams("num_ideas must be >= 1")
    ts = clock.now_ms()
    if task_id is None:
        task_id = f"task-{ts}-{len(builder._events)}"
    task = SuggestionTask(
        task_id=task_id,
        doc_id=doc_id,
        task_type=task_type,
        snippet_text=snippet_text,
        snippet_start=snippet_start,
        snippet_len=len(snippet_text),
        created_ts_ms=ts,
        instruction=instruction,
        num_ideas=num_ideas,
        horizon=horizon,
    )
    builder.add_task_created(
        ts,
        doc_id,
        task_id=task.task_id,
        task_type=task_type,
        snippet_start=snippet_start,
        snippet_len=len(snippet_text),
        instruction=instruction,
        num_ideas=num_ideas,
        horizon=horizon,
    )
    return task


@dataclass(frozen=True)
class CostModel:
    """Configurable credit accounting for task creation."""

    crowd_base_per_idea: float = 1.0
    crowd_fee_multiplier: float = 1.2
    completion_budget_tokens: int = 100
    rate_per_1k_tokens: float = 0.02

    @staticmethod
    def from_dict(d: dict) -> "CostModel":
        return CostModel(
            crowd_base_per_idea=float(d.get("crowd_base_per_idea", 1.0)),
            crowd_fee_multiplier=float(d.get("crowd_fee_multiplier", 1.2)),
            completion_budget_tokens=int(d.get("completion_budget_tokens", 100)),
            rate_per_1k_tokens=float(d.get("rate_per_1k_tokens", 0.02)),
        )


def estimate_tokens(text: str) -> int:
    """ceil(code points / 4)."""
    return (len(text) + 3) // 4


def estimate_cost(task: SuggestionTask, cost_model: Optional[CostModel] = None) -> float:
    """Crowd: num_ideas * (words/1000 + base) * fee. Model types:
    (prompt tokens + completion budget) * rate. Absent and empty
    instructions cost the same."""
    model = cost_model or CostModel()
    if task.task_type == "crowd":
        words = word_count(task.snippet_text)
        per_idea = words / 1000.0 + model.crowd_base_per_idea
        return (task.num_ideas or 1) * per_idea * model.crowd_fee_multiplier
    prompt = task.snippet_text + (task.instruction or "")
    tokens = estimate_tokens(prompt) + model.completion_budget_tokens
    return tokens * model.rate_per_1k_tokens / 1000.0


def render_plot_prompt(snippet: str, instruction: str) -> str:
    """Story-arc prompt; placeholders substituted verbatim, no trimming."""
    if snippet == "":
        raise EmptySnippet("plot prompts need a non-empty snippet")
    return (
        f"Given the previous story: {snippet}.\n"
        f"Follow the instruction: {instruction} to describe the follow-up story arc "
        f"using 50 words."
    )


def dispatch_task(
    task: SuggestionTask,
    registry: dict[str, SuggestionProvider],
    clock: Clock,
    rng: SeededRng,
    builder: EventLogBuilder,
) -> list[Suggestion]:
    """Generate ideas via the task type's provider and append delivery
    events; repeated dispatch continues the tab index sequence."""
    provider = registry.get(task.task_type)
    if provider is None:
        raise NoProvider(task.task_type)
    try:
        results = provider.generate(task, rng)
    except ProviderFailure:
        logger.exception("provider for %s failed; task %s left pending", task.task_type, task.task_id)
        raise
    base_tab = builder.delivered_count(task.task_id)
    now = clock.now_ms()
    suggestions = []
    for i, (latency_s, text) in enumerate(results):
        if latency_s < 0:
            raise ProviderFailure(f"provider returned negative latency {latency_s}")
        tab = base_tab + i
        suggestion_id = f"{task.task_id}-s{tab}"
        # Latencies are committed at millisecond resolution, the log's unit.
        latency_ms = round(latency_s * 1000.0)
        latency_s = latency_ms / 1000.0
        delivered_ts = now + latency_ms
        builder.add_suggestion_delivered(
            delivered_ts,
            task.doc_id,
            task_id=task.task_id,
            suggestion_id=suggestion_id,
            tab_index=tab,
            text=text,
        )
        suggestions.append(
            Suggestion(
                suggestion_id=suggestion_id,
                task_id=task.task_id,
                tab_index=tab,
                text=text,
                latency_s=latency_s,
                delivered_ts_ms=delivered_ts,
            )
        )
    return suggestions


# --- Simulated providers -------------------------------------------------------


@dataclass(frozen=True)
class CrowdLatencyParams:
    """Lognormal latency calibrated by median and upper/lower quartile ratio."""

    median_s: float = 3449.0
    quartile_ratio: float = 8160.0 / 1753.0

    @property
    def mu(self) -> float:
        return math.log(self.median_s)

    @property
    def sigma(self) -> float:
        return math.log(self.quartile_ratio) / (2.0 * _PHI_INV_75)


def simulate_crowd_latency(rng: SeededRng, params: Optional[CrowdLatencyParams] = None) -> float:
    """One lognormal crowd-response latency draw, in seconds."""
    p = params or CrowdLatencyParams()
    return rng.next_lognormal(p.mu, p.sigma)


def _sentences(rng: SeededRng, n_sentences: int, words_per_sentence: tuple[int, int] = (5, 9)) -> str:
    vocab = wordlists.SUGGESTION_WORDS
    sentences = []
    for _ in range(n_sentences):
        n = rng.int_between(*words_per_sentence)
        words = [vocab[rng.next_int(len(vocab))] for _ in range(n)]
        sentences.append(" ".join([words[0].capitalize()] + words[1:]) + ".")
    return " ".join(sentences)


@dataclass(frozen=True)
class SimulatedCrowdProvider:
    latency: CrowdLatencyParams = field(default_factory=CrowdLatencyParams)

    def generate(self, task: SuggestionTask, rng: SeededRng) -> list[tuple[float, str]]:
        ideas = []
        for _ in range(task.num_ideas or 1):
            latency_s = simulate_crowd_latency(rng, self.latency)
            ideas.append((latency_s, _sentences(rng, rng.int_between(1, 2))))
        return ideas


@dataclass(frozen=True)
class SimulatedPlotProvider:
    """Story-plot forecast stub; far-horizon plots run longer."""

    latency: GapDist = field(default_factory=lambda: GapDist(base_s=6.0, mean_s=2.0))

    def generate(self, task: SuggestionTask, rng: SeededRng) -> list[tuple[float, str]]:
        latency_s = self.latency.draw_s(rng)
        n = 2 if task.horizon == "near" else 3
        return [(latency_s, _sentences(rng, n))]


@dataclass(frozen=True)
class SimulatedCompletionProvider:
    """Stub for the text-completion backends (arc prompts and raw
    continuations)."""

    latency: GapDist = field(default_factory=lambda: GapDist(base_s=8.0, mean_s=1.5))

    def generate(self, task: SuggestionTask, rng: SeededRng) -> list[tuple[float, str]]:
        latency_s = self.latency.draw_s(rng)
        if task.task_type == "gpt3_plot":
            # The rendered prompt is what a live backend would receive.
            render_plot_prompt(task.snippet_text, task.instruction or "")
            n = 2
        else:
            n = rng.int_between(2, 3)
        return [(latency_s, _sentences(rng, n))]


class RemoteCompletionProvider:
    """POST {endpoint}/complete with a completion request; returns the
    response text with measured wall latency. The API key is read from
    INKFLUX_API_KEY and sent as a bearer token."""

    def __init__(
        self,
        endpoint: str,
        model: str = DEFAULT_COMPLETION_MODEL,
        max_tokens: int = DEFAULT_COMPLETION_MAX_TOKENS,
        temperature: float = DEFAULT_COMPLETION_TEMPERATURE,
        timeout_s: float = 30.0,
        client: Optional[httpx.Client] = None,
    ):
        self._endpoint = endpoint.rstrip("/")
        self._model = model
        self._max_tokens = max_tokens
        self._temperature = temperature
        self._client = client or httpx.Client(timeout=timeout_s)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(API_KEY_ENV)
        return {"Authorization": f"Bearer {key}"} if key else {}

    def generate(self, task: SuggestionTask, rng: SeededRng) -> list[tuple[float, str]]:
        if task.task_type == "gpt3_plot":
            prompt = render_plot_prompt(task.snippet_text, task.instruction or "")
        else:
            prompt = task.snippet_text
        payload = {
            "model": self._model,
            "prompt": prompt,
            "max_tokens": self._max_tokens,
            "temperature": self._temperature,
        }
        started = time.monotonic()
        try:
            response = self._client.post(
                self._endpoint + "/complete", json=payload, headers=self._headers()
            )
            response.raise_for_status()
            body = response.json()
        except httpx.HTTPError as exc:
            raise ProviderFailure(f"completion request failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderFailure("completion response is not valid JSON") from exc
        text = body.get("text")
        if not isinstance(text, str):
            raise ProviderFailure("completion response missing 'text'")
        return [(time.monotonic() - started, text)]


def build_provider(task_type: str, spec: dict) -> SuggestionProvider:
    kind = spec.get("kind")
    if kind == "sim_crowd":
        params = CrowdLatencyParams(
            median_s=float(spec.get("median_s", 3449.0)),
            quartile_ratio=float(spec.get("quartile_ratio", 8160.0 / 1753.0)),
        )
        return SimulatedCrowdProvider(latency=params)
    if kind == "sim_plot":
        return SimulatedPlotProvider(latency=GapDist.from_dict(spec.get("latency_s", {"base_s": 6.0, "mean_s": 2.0})))
    if kind == "sim_model":
        return SimulatedCompletionProvider(latency=GapDist.from_dict(spec.get("latency_s", {"base_s": 8.0, "mean_s": 1.5})))
    if kind == "remote":
        endpoint = spec.get("endpoint")
        if not endpoint:
            raise InvalidConfig("remote provider needs an 'endpoint'")
        return RemoteCompletionProvider(
            endpoint=endpoint,
            model=spec.get("model", DEFAULT_COMPLETION_MODEL),
            max_tokens=int(spec.get("max_tokens", DEFAULT_COMPLETION_MAX_TOKENS)),
            temperature=float(spec.get("temperature", DEFAULT_COMPLETION_TEMPERATURE)),
            timeout_s=float(spec.get("timeout_s", 30.0)),
        )
    raise InvalidConfig(f"unknown provider kind {kind!r} for {task_type}")


def default_registry() -> dict[str, SuggestionProvider]:
    return {
        "crowd": SimulatedCrowdProvider(),
        "story_plot": SimulatedPlotProvider(),
        "gpt3_plot": SimulatedCompletionProvider(latency=GapDist(base_s=7.0, mean_s=1.5)),
        "gpt3_continuation": SimulatedCompletionProvider(),
    }


# --- Scripted simulation --------------------------------------------------------


@dataclass
class TaskTrace:
    task_id: str
    task_type: str
    created_ts_ms: int
    estimated_cost: float
    latencies_s: list[float]
    suggestion_ids: list[str]
    read_ts_ms: Optional[int] = None

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class SimulationTrace:
    tasks: list[TaskTrace]

    def to_dict(self) -> dict:
        return {"tasks": [t.to_dict() for t in self.tasks]}


def run_simulation(config: dict) -> tuple[EventLog, SimulationTrace]:
    """Execute a scripted scenario under a virtual clock and return the
    assembled log plus per-task planted latencies."""
    if not isinstance(config, dict):
        raise InvalidConfig("simulation config must be a JSON object")
    seed = int(config.get("seed", 0))
    doc_id = str(config.get("doc_id", "doc-1"))
    clock_cfg = config.get("clock", {})
    if clock_cfg.get("mode", "virtual") != "virtual":
        raise InvalidConfig("scripted simulation supports only the virtual clock")
    start_ms = int(clock_cfg.get("start_ms", 0))
    cost_model = CostModel.from_dict(config.get("cost_model", {}))

    registry = default_registry()
    for task_type, spec in (config.get("providers") or {}).items():
        if task_type not in TASK_TYPES:
            raise InvalidConfig(f"provider for unknown task type {task_type!r}")
        registry[task_type] = build_provider(task_type, spec)

    script = config.get("script") or {}
    clock = VirtualClock(start_ms)
    builder = EventLogBuilder()
    rng = SeededRng(seed)
    typing_rng = rng.split(0)
    provider_rng = rng.split(1)

    doc_text = ""
    boundary = 0  # paste offset: just past the last completed sentence

    def append_text(ts: int, chunk: str, at_boundary: bool) -> None:
        nonlocal doc_text, boundary
        offset = boundary if at_boundary else len(doc_text)
        builder.add_text_change(ts, doc_id, [retain(offset), insert(chunk)])
        doc_text = doc_text[:offset] + chunk + doc_text[offset:]
        if at_boundary:
            boundary += len(chunk)
        elif chunk.endswith(". "):
            boundary = len(doc_text)

    # Action heap: (ts_ms, tie, kind, payload)
    heap: list = []
    tie = 0

    def push(ts_ms: int, kind: str, payload) -> None:
        nonlocal tie
        heapq.heappush(heap, (ts_ms, tie, kind, payload))
        tie += 1

    base_text = script.get("base_text")
    if base_text:
        push(start_ms, "base_text", base_text)

    typer = SentenceTyper(wordlists.TYPED_WORDS, (5, 9), typing_rng)
    for burst in script.get("typing", []):
        at_ms = start_ms + round(float(burst["at_s"]) * 1000.0)
        interval_ms = max(1, round(float(burst.get("interval_s", 2.0)) * 1000.0))
        for i in range(int(burst["words"])):
            push(at_ms + i * interval_ms, "word", None)

    for i, entry in enumerate(script.get("tasks", [])):
        at_ms = start_ms + round(float(entry["at_s"]) * 1000.0)
        push(at_ms, "task", (i, entry))

    traces: dict[str, TaskTrace] = {}
    trace_order: list[str] = []

    while heap:
        ts, _, kind, payload = heapq.heappop(heap)
        clock.advance_to(ts)
        if kind == "base_text":
            append_text(ts, payload if payload.endswith(" ") else payload + " ", False)
            boundary = len(doc_text)
        elif kind == "word":
            append_text(ts, typer.next_chunk(), False)
        elif kind == "task":
            i, entry = payload
            task_type = entry["task_type"]
            snippet_start = int(entry.get("snippet_start", 0))
            snippet_len = int(entry.get("snippet_len", 120))
            snippet = doc_text[snippet_start : snippet_start + snippet_len]
            task = create_task(
                doc_id,
                snippet,
                task_type,
                clock,
                builder,
                snippet_start=snippet_start,
                instruction=entry.get("instruction"),
                num_ideas=entry.get("num_ideas"),
                horizon=entry.get("horizon"),
                task_id=f"t{i:03d}",
            )
            suggestions = dispatch_task(task, registry, clock, provider_rng.split(i), builder)
            trace = TaskTrace(
                task_id=task.task_id,
                task_type=task_type,
                created_ts_ms=task.created_ts_ms,
                estimated_cost=estimate_cost(task, cost_model),
                latencies_s=[s.latency_s for s in suggestions],
                suggestion_ids=[s.suggestion_id for s in suggestions],
            )
            traces[task.task_id] = trace
            trace_order.append(task.task_id)
            read_after_s = entry.get("read_after_s")
            if read_after_s is not None and suggestions:
                first = min(suggestions, key=lambda s: s.delivered_ts_ms)
                read_ts = first.delivered_ts_ms + round(float(read_after_s) * 1000.0)
                push(read_ts, "read", (task.task_id, first))
                adopt_after_s = entry.get("adopt_after_s")
                if adopt_after_s is not None:
                    push(read_ts + round(float(adopt_after_s) * 1000.0), "adopt", first)
        elif kind == "read":
            task_id, suggestion = payload
            builder.add_suggestion_read(ts, doc_id, suggestion.suggestion_id)
            traces[task_id].read_ts_ms = ts
        elif kind == "adopt":
            suggestion = payload
            sentence = suggestion.text.split(". ")[0]
            if not sentence.endswith("."):
                sentence += "."
            append_text(ts, sentence + " ", True)

    log = builder.build()
    return log, SimulationTrace(tasks=[traces[tid] for tid in trace_order])
