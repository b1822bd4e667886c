"""FastAPI application exposing the pipeline over HTTP.

Domain failures map to 400 with a structured body; missing input files
map to 404. Everything else is a plain 500."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..classifiers import ALGORITHMS
from ..errors import LddosError
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="lddos", version=__version__)

    @app.exception_handler(LddosError)
    async def domain_error(request: Request, exc: LddosError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(FileNotFoundError)
    async def missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(
            status_code=404,
            content={"error": "FileNotFoundError", "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def bad_value(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    async def health():
        return schemas.HealthResponse(
            status="ok", version=__version__, algorithms=list(ALGORITHMS)
        )

    @app.post("/synth", response_model=schemas.SynthResponse)
    async def synth(req: schemas.SynthRequest):
        return pipeline.run_synth(req.spec, req.out, req.labels, req.seed)

    @app.post("/extract", response_model=schemas.ExtractResponse)
    async def extract(req: schemas.ExtractRequest):
        return pipeline.run_extract(
            req.capture, req.out, req.labels, req.include_partial, req.idle_timeout
        )

    @app.post("/merge", response_model=schemas.MergeResponse)
    async def merge(req: schemas.MergeRequest):
        return pipeline.run_merge(req.inputs, req.out, req.intersect)

    @app.post("/select", response_model=schemas.SelectResponse)
    async def select(req: schemas.SelectRequest):
        return pipeline.run_select(
            req.data,
            req.report,
            method=req.method,
            folds=req.folds,
            seed=req.seed,
            preset=req.preset,
            normalization=req.normalization,
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    async def train(req: schemas.TrainRequest):
        return pipeline.run_train(
            req.algo,
            req.data,
            req.model,
            features=req.features,
            seed=req.seed,
            hyperparameters=req.hyperparameters,
            normalization=req.normalization,
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    async def evaluate(req: schemas.EvaluateRequest):
        return pipeline.run_evaluate(
            req.algos,
            req.data,
            req.report,
            folds=req.folds,
            train_fraction=req.train_fraction,
            seed=req.seed,
            features=req.features,
            normalization=req.normalization,
            hyperparameters=req.hyperparameters,
            with_timing=req.with_timing,
            dataset_name=req.dataset_name,
        )

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    async def classify(req: schemas.ClassifyRequest):
        return pipeline.run_classify(
            req.model, req.capture, req.out, req.include_partial, req.idle_timeout
        )

    return app


app = create_app()
