"""Pydantic request/response models for the HTTP service."""
from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ValidateRequest(BaseModel):
    log: str


class ValidateResponse(BaseModel):
    events: int
    documents: int
    tasks: int
    suggestions: int
    reads: int


class ReconstructRequest(BaseModel):
    log: str
    doc_id: str
    at_ms: int


class ReconstructResponse(BaseModel):
    doc_id: str
    as_of_ms: float
    text: str


class SweepSpec(BaseModel):
    lo_s: float = 60.0
    hi_s: float = 1200.0
    step_s: float = 60.0


class SessionsRequest(BaseModel):
    log: str
    threshold_s: Optional[float] = None
    sweep: Optional[SweepSpec] = None
    pooled: bool = False


class SessionModel(BaseModel):
    doc_id: str
    start_ms: int
    end_ms: int
    event_count: int
    duration_s: float


class SweepPointModel(BaseModel):
    threshold_s: float
    session_count: int


class SessionsResponse(BaseModel):
    threshold_s: float
    knee_s: Optional[float] = None
    sweep: Optional[list[SweepPointModel]] = None
    sessions: list[SessionModel]


class BundleResponse(BaseModel):
    files: dict[str, str]
    meta: dict[str, Any]


class Rq1Request(BaseModel):
    log: str
    phases: int = 4


class Rq2Request(BaseModel):
    log: str
    window_s: float = 300.0
    runs: int = Field(default=1000, ge=1)
    seed: int = 0
    threshold_s: float = 240.0
    grid_points: int = Field(default=256, ge=16)


class Rq3Request(BaseModel):
    log: str
    metric: str
    window_s: float = 300.0
    runs: int = Field(default=1000, ge=1)
    seed: int = 0
    threshold_s: float = 240.0
    grid_points: int = Field(default=256, ge=16)
    embed_endpoint: Optional[str] = None
    paraphrase_endpoint: Optional[str] = None


class SynthRequest(BaseModel):
    config: dict[str, Any]


class SynthResponse(BaseModel):
    log: str
    truth: dict[str, Any]


class SimulateRequest(BaseModel):
    config: dict[str, Any]


class SimulateResponse(BaseModel):
    log: str
    trace: dict[str, Any]


# Wire formats of the provider protocol, served by this app's stub providers
# and consumed by the remote provider clients.


class EmbedRequest(BaseModel):
    texts: list[str]


class EmbedResponse(BaseModel):
    vectors: list[list[float]]


class ParaphraseRequest(BaseModel):
    pairs: list[tuple[str, str]]


class ParaphraseResponse(BaseModel):
    scores: list[float]


class CompleteRequest(BaseModel):
    model: str
    prompt: str
    max_tokens: int = 100
    temperature: float = 0.8


class CompleteResponse(BaseModel):
    text: str


class ErrorBody(BaseModel):
    error: str
    message: str
