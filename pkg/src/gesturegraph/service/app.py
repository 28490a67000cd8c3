"""FastAPI application exposing the pipeline over HTTP.

Run with ``uvicorn gesturegraph.service.app:app``. The CLI calls the same
handler functions in-process by default and can target a running instance of
this app with ``--server``.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import GestureGraphError
from . import handlers, schemas

app = FastAPI(
    title="gesturegraph",
    description=(
        "Motion-graph gesture synthesis: build graphs from motion documents, "
        "retrieve time-aligned walks for query motions, sample query motions "
        "with a pluggable denoiser, stitch walks into motion tracks and render "
        "plans, and compute motion-level metrics."
    ),
    version="0.1.0",
)


@app.exception_handler(GestureGraphError)
async def domain_error_handler(request: Request, exc: GestureGraphError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content=schemas.ErrorResponse(error=type(exc).__name__, detail=str(exc)).model_dump(),
    )


@app.exception_handler(FileNotFoundError)
async def missing_file_handler(request: Request, exc: FileNotFoundError) -> JSONResponse:
    return JSONResponse(
        status_code=404,
        content=schemas.ErrorResponse(error="FileNotFoundError", detail=str(exc)).model_dump(),
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/graph/build", response_model=schemas.BuildGraphResponse)
def build_graph(req: schemas.BuildGraphRequest) -> schemas.BuildGraphResponse:
    return handlers.build_graph(req)


@app.post("/graph/inspect", response_model=schemas.InspectResponse)
def inspect(req: schemas.InspectRequest) -> schemas.InspectResponse:
    return handlers.inspect(req)


@app.post("/retrieve", response_model=schemas.RetrieveResponse)
def retrieve(req: schemas.RetrieveRequest) -> schemas.RetrieveResponse:
    return handlers.retrieve(req)


@app.post("/sample", response_model=schemas.SampleResponse)
def sample(req: schemas.SampleRequest) -> schemas.SampleResponse:
    return handlers.sample(req)


@app.post("/stitch", response_model=schemas.StitchResponse)
def stitch(req: schemas.StitchRequest) -> schemas.StitchResponse:
    return handlers.stitch(req)


@app.post("/metrics", response_model=schemas.MetricsResponse)
def metrics(req: schemas.MetricsRequest) -> schemas.MetricsResponse:
    return handlers.metrics(req)
