"""FastAPI service wrapping the core engine.

Endpoints are stateless: logs travel in request bodies and report bundles
come back as named file contents, so the CLI (or any client) owns all disk
IO. The app also serves stub /providers endpoints implementing the remote
provider wire formats, handy as offline stand-ins for real backends.
"""
from __future__ import annotations

import hashlib

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import analyses, reports
from ..errors import DataError, InkfluxError, ProviderError
from ..oplog import (
    SuggestionDeliveredEvent,
    SuggestionReadEvent,
    TaskCreatedEvent,
    parse_event_log,
    reconstruct_at,
    serialize_event_log,
)
from ..orchestrator import run_simulation
from ..sessionizer import default_sweep_grid, knee_threshold, threshold_sweep
from ..stats import SeededRng
from ..synthgen import SynthConfig, generate_log
from ..textmetrics import (
    LogisticParaphraseStub,
    MetricBackends,
    RemoteEmbeddingProvider,
    RemoteParaphraseProvider,
    SIMILARITY_METRICS,
)
from . import models

STUB_EMBEDDING_DIM = 256


def _error_response(status: int, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": type(exc).__name__, "message": str(exc)},
    )


def _backends(request: models.Rq3Request) -> MetricBackends:
    embedding = (
        RemoteEmbeddingProvider(request.embed_endpoint) if request.embed_endpoint else None
    )
    paraphrase = (
        RemoteParaphraseProvider(request.paraphrase_endpoint)
        if request.paraphrase_endpoint
        else None
    )
    return MetricBackends(embedding=embedding, paraphrase=paraphrase)


def _stub_embed(text: str) -> list[float]:
    """Hashed term-frequency embedding with a fixed dimension."""
    from ..textmetrics import tokens

    vec = [0.0] * STUB_EMBEDDING_DIM
    for token in tokens(text):
        digest = hashlib.sha1(token.lower().encode("utf-8")).digest()
        vec[int.from_bytes(digest[:4], "big") % STUB_EMBEDDING_DIM] += 1.0
    return vec


def _stub_complete(prompt: str, max_tokens: int) -> str:
    """Deterministic continuation: seeded by the prompt digest."""
    from .. import wordlists

    digest = hashlib.sha1(prompt.encode("utf-8")).digest()
    rng = SeededRng(int.from_bytes(digest[:8], "big"))
    n_words = max(1, min(max_tokens, 40))
    vocab = wordlists.SUGGESTION_WORDS
    words = [vocab[rng.next_int(len(vocab))] for _ in range(n_words)]
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def create_app() -> FastAPI:
    app = FastAPI(title="inkflux", version="0.1.0")

    @app.exception_handler(DataError)
    async def _data_error(request: Request, exc: DataError):
        return _error_response(400, exc)

    @app.exception_handler(ProviderError)
    async def _provider_error(request: Request, exc: ProviderError):
        return _error_response(502, exc)

    @app.exception_handler(InkfluxError)
    async def _other_error(request: Request, exc: InkfluxError):
        return _error_response(500, exc)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/logs/validate", response_model=models.ValidateResponse)
    def validate(request: models.ValidateRequest) -> models.ValidateResponse:
        log = parse_event_log(request.log)
        return models.ValidateResponse(
            events=len(log.events),
            documents=len(log.doc_ids()),
            tasks=sum(1 for e in log.events if isinstance(e, TaskCreatedEvent)),
            suggestions=sum(1 for e in log.events if isinstance(e, SuggestionDeliveredEvent)),
            reads=sum(1 for e in log.events if isinstance(e, SuggestionReadEvent)),
        )

    @app.post("/logs/reconstruct", response_model=models.ReconstructResponse)
    def reconstruct(request: models.ReconstructRequest) -> models.ReconstructResponse:
        log = parse_event_log(request.log)
        state = reconstruct_at(log, request.doc_id, request.at_ms)
        return models.ReconstructResponse(
            doc_id=state.doc_id, as_of_ms=state.as_of_ms, text=state.text
        )

    @app.post("/logs/sessions", response_model=models.SessionsResponse)
    def sessions(request: models.SessionsRequest) -> models.SessionsResponse:
        log = parse_event_log(request.log)
        sweep_points = None
        knee_s = None
        threshold_s = request.threshold_s
        if request.sweep is not None or threshold_s is None:
            spec = request.sweep or models.SweepSpec()
            grid = default_sweep_grid(spec.lo_s, spec.hi_s, spec.step_s)
            # The sweep always pools activity; per-document segmentation
            # applies once the threshold is fixed.
            sweep = threshold_sweep(analyses.activity_timestamps(log), grid)
            sweep_points = [
                models.SweepPointModel(threshold_s=t, session_count=c)
                for t, c in sweep.points
            ]
            knee_s = knee_threshold(sweep)
            if threshold_s is None:
                threshold_s = knee_s
        found = analyses.working_sessions(log, threshold_s, pooled=request.pooled)
        return models.SessionsResponse(
            threshold_s=threshold_s,
            knee_s=knee_s,
            sweep=sweep_points,
            sessions=[
                models.SessionModel(
                    doc_id=s.doc_id,
                    start_ms=s.start_ms,
                    end_ms=s.end_ms,
                    event_count=s.event_count,
                    duration_s=s.duration_s,
                )
                for s in found
            ],
        )

    @app.post("/analyses/rq1", response_model=models.BundleResponse)
    def rq1(request: models.Rq1Request) -> models.BundleResponse:
        log = parse_event_log(request.log)
        bundle = reports.build_rq1_bundle(log, k=request.phases)
        return models.BundleResponse(files=bundle.files, meta=bundle.meta)

    @app.post("/analyses/rq2", response_model=models.BundleResponse)
    def rq2(request: models.Rq2Request) -> models.BundleResponse:
        log = parse_event_log(request.log)
        bundle = reports.build_rq2_bundle(
            log,
            window_s=request.window_s,
            runs=request.runs,
            seed=request.seed,
            threshold_s=request.threshold_s,
            grid_points=request.grid_points,
        )
        return models.BundleResponse(files=bundle.files, meta=bundle.meta)

    @app.post("/analyses/rq3", response_model=models.BundleResponse)
    def rq3(request: models.Rq3Request) -> models.BundleResponse:
        if request.metric not in SIMILARITY_METRICS:
            raise DataError(f"unknown metric {request.metric!r}")
        log = parse_event_log(request.log)
        bundle = reports.build_rq3_bundle(
            log,
            metric=request.metric,
            window_s=request.window_s,
            runs=request.runs,
            seed=request.seed,
            threshold_s=request.threshold_s,
            grid_points=request.grid_points,
            backends=_backends(request),
        )
        return models.BundleResponse(files=bundle.files, meta=bundle.meta)

    @app.post("/synth", response_model=models.SynthResponse)
    def synth(request: models.SynthRequest) -> models.SynthResponse:
        config = SynthConfig.from_dict(request.config)
        log, truth = generate_log(config)
        return models.SynthResponse(log=serialize_event_log(log), truth=truth.to_dict())

    @app.post("/simulate", response_model=models.SimulateResponse)
    def simulate(request: models.SimulateRequest) -> models.SimulateResponse:
        log, trace = run_simulation(request.config)
        return models.SimulateResponse(log=serialize_event_log(log), trace=trace.to_dict())

    # Stub provider endpoints implementing the remote wire formats.

    @app.post("/providers/embed", response_model=models.EmbedResponse)
    def embed(request: models.EmbedRequest) -> models.EmbedResponse:
        return models.EmbedResponse(vectors=[_stub_embed(t) for t in request.texts])

    @app.post("/providers/paraphrase", response_model=models.ParaphraseResponse)
    def paraphrase(request: models.ParaphraseRequest) -> models.ParaphraseResponse:
        return models.ParaphraseResponse(
            scores=LogisticParaphraseStub().score_many(request.pairs)
        )

    @app.post("/providers/complete", response_model=models.CompleteResponse)
    def complete(request: models.CompleteRequest) -> models.CompleteResponse:
        return models.CompleteResponse(
            text=_stub_complete(request.prompt, request.max_tokens)
        )

    return app


app = create_app()
