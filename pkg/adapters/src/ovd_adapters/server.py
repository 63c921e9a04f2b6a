"""HTTP service exposing a detector over the engine wire protocol.

Routes: ``POST /v1/detect``, ``GET /v1/health``, ``GET /v1/model``.
Malformed requests get 400, unresolvable image paths 404, and 503 is
returned until the model has loaded. Every reply is checked against the
wire schema before it leaves the process.
"""

from __future__ import annotations

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import AdapterConfig
from .models import build_model

logger = logging.getLogger(__name__)


class DetectRequest(BaseModel):
    image_path: str
    prompts: list[str]


class ResponseSchemaError(RuntimeError):
    pass


def validate_detections(detections: list[dict], n_prompts: int) -> None:
    """Self-check one reply against the wire schema before sending it."""
    if not isinstance(detections, list):
        raise ResponseSchemaError("detections must be a list")
    for i, det in enumerate(detections):
        bbox = det.get("bbox")
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) for v in bbox)
        ):
            raise ResponseSchemaError(f"detection {i}: malformed bbox {bbox!r}")
        if bbox[2] <= 0 or bbox[3] <= 0:
            raise ResponseSchemaError(f"detection {i}: non-positive box size {bbox!r}")
        score = det.get("score")
        if not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
            raise ResponseSchemaError(f"detection {i}: score {score!r} outside [0, 1]")
        index = det.get("prompt_index")
        if not isinstance(index, int) or not 0 <= index < n_prompts:
            raise ResponseSchemaError(
                f"detection {i}: prompt_index {index!r} outside [0, {n_prompts})"
            )


def create_app(config: AdapterConfig, preload: bool = True) -> FastAPI:
    """Build the service; ``preload=False`` defers model loading for tests."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if preload:
            app.state.load_model()
        yield

    app = FastAPI(title="ovd-adapter", lifespan=lifespan)
    app.state.config = config
    app.state.model = None

    def load_model() -> None:
        model = build_model(config)
        model.load()
        app.state.model = model
        logger.info("model %s ready", config.model)

    app.state.load_model = load_model

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/v1/health")
    async def health():
        if app.state.model is None:
            return JSONResponse(status_code=503, content={"ok": False})
        return {"ok": True}

    @app.get("/v1/model")
    async def model_info():
        if app.state.model is None:
            return JSONResponse(status_code=503, content={"ok": False})
        return {
            "name": config.model,
            "supports_background_class": config.supports_background_class,
        }

    @app.post("/v1/detect")
    async def detect(request: DetectRequest):
        if app.state.model is None:
            return JSONResponse(status_code=503, content={"ok": False})
        resolved = config.resolve_image(request.image_path)
        if not resolved.exists():
            return JSONResponse(
                status_code=404,
                content={"error": f"image {request.image_path!r} not found"},
            )
        detections = app.state.model.predict(resolved, request.prompts)
        detections = [d for d in detections if d["score"] >= config.score_floor]
        try:
            validate_detections(detections, n_prompts=len(request.prompts))
        except ResponseSchemaError as e:
            logger.error("reply failed self-check: %s", e)
            return JSONResponse(status_code=500, content={"error": str(e)})
        return {"detections": detections}

    return app


def serve(config: AdapterConfig, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Run the service until interrupted (one model per process)."""
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="info")
