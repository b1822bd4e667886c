"""Request and response bodies for the HTTP service.

Paths are interpreted on the server's filesystem; the service is a
local pipeline runner, not a file-upload API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SynthRequest(BaseModel):
    spec: dict | list
    out: str
    labels: str | None = None
    seed: int | None = None


class SynthResponse(BaseModel):
    capture: str
    labels: str | None
    packets: int
    flows: int
    attack_flows: int
    interleave_seed: int


class ExtractRequest(BaseModel):
    capture: str
    out: str
    labels: str | None = None
    include_partial: bool = False
    idle_timeout: float = Field(default=300.0, gt=0)


class ExtractResponse(BaseModel):
    out: str
    rows: int
    packets: int
    tcp_segments: int
    malformed: int
    fragments_dropped: int
    connections: int
    segments_after_close: int
    syn_retransmits: int
    skipped_partial: int
    unlabeled: int


class MergeRequest(BaseModel):
    inputs: list[str] = Field(min_length=1)
    out: str
    intersect: bool = False


class MergeResponse(BaseModel):
    out: str
    rows: int
    legit: int
    attack: int


class SelectRequest(BaseModel):
    data: str
    report: str
    method: str = "rfecv"
    folds: int = Field(default=10, ge=2)
    seed: int = 0
    preset: str | None = None
    normalization: str = "minmax"


class SelectResponse(BaseModel):
    report: str
    chosen: list[str]
    pruned: list[str]
    best_accuracy: float
    best_cardinality: int


class TrainRequest(BaseModel):
    algo: str
    data: str
    model: str
    features: str | None = None
    seed: int = 0
    hyperparameters: dict | None = None
    normalization: str = "minmax"


class TrainResponse(BaseModel):
    model: str
    algorithm: str
    features: list[str]
    rows: int
    train_accuracy: float
    seed: int


class EvaluateRequest(BaseModel):
    algos: str | list[str] = "all"
    data: str
    report: str
    folds: int = Field(default=10, ge=2)
    train_fraction: float = Field(default=0.5, gt=0, lt=1)
    seed: int = 0
    features: str | None = None
    normalization: str = "minmax"
    hyperparameters: dict | None = None
    with_timing: bool = True
    dataset_name: str | None = None


class EvalEntry(BaseModel):
    dataset: str
    algorithm: str
    source: str
    accuracy: float | None
    fpr: float | None
    fnr: float | None
    eval_time: float | None
    confusion: list[int]


class EvaluateResponse(BaseModel):
    report: str
    table: str
    results: list[EvalEntry]


class ClassifyRequest(BaseModel):
    model: str
    capture: str
    out: str
    include_partial: bool = False
    idle_timeout: float = Field(default=300.0, gt=0)


class ClassifyResponse(BaseModel):
    out: str
    flows: int
    attack: int
    rows: int
    packets: int
    tcp_segments: int
    malformed: int
    fragments_dropped: int
    connections: int
    segments_after_close: int
    syn_retransmits: int
    skipped_partial: int
    unlabeled: int


class HealthResponse(BaseModel):
    status: str
    version: str
    algorithms: list[str]
