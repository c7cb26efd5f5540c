"""HTTP surface: POST /embed and GET /models.

POST /embed  {"model": str, "texts": [str]} -> 200 {"dim": int, "vectors": [[float]]}
GET  /models -> 200 {"models": [{"name": str, "dim": int, "prefix": str}]}

Every non-200 response carries {"error": str}: 400 for a bad request
(unknown model, empty or oversize batch, empty-string texts), 503 while
the requested model is being loaded by another request, 500 when a
loaded model contradicts its registry entry.

Vectors are L2-normalized here, server-side, regardless of what the
model emits; clients are documented to renormalize too, and neither side
assumes the other did.
"""
from __future__ import annotations

import logging
from typing import Any

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .registry import ModelLoading, ModelMisconfigured, ModelRegistry

logger = logging.getLogger("embedsvc.app")

BATCH_LIMIT = 128


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def normalize_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if not np.all(norms > 0.0):
        raise ModelMisconfigured("model produced a zero vector")
    return rows / norms


def create_app(registry: ModelRegistry) -> FastAPI:
    app = FastAPI(title="embedsvc", docs_url=None, redoc_url=None, openapi_url=None)

    @app.exception_handler(RequestValidationError)
    async def _unparseable_body(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error(400, "request body must be a JSON object")

    @app.post("/embed")
    def embed(payload: Any = Body(None)) -> JSONResponse:
        if not isinstance(payload, dict):
            return _error(400, "request body must be a JSON object")
        model = payload.get("model")
        texts = payload.get("texts")
        if not isinstance(model, str) or model not in registry:
            return _error(400, f"unknown model {model!r}")
        if not isinstance(texts, list) or not texts:
            return _error(400, "texts must be a non-empty list")
        if len(texts) > BATCH_LIMIT:
            return _error(400, f"batch of {len(texts)} exceeds limit {BATCH_LIMIT}")
        if any(not isinstance(t, str) or t == "" for t in texts):
            return _error(400, "texts must be non-empty strings")
        try:
            vectors = normalize_rows(registry.encode(model, texts))
        except ModelLoading as exc:
            return _error(503, str(exc))
        except ModelMisconfigured as exc:
            logger.error("%s", exc)
            return _error(500, str(exc))
        return JSONResponse({"dim": registry.dim(model), "vectors": vectors.tolist()})

    @app.get("/models")
    def models() -> JSONResponse:
        entries = [
            {"name": spec.name, "dim": spec.dim, "prefix": spec.prefix}
            for spec in registry.specs()
        ]
        return JSONResponse({"models": entries})

    return app
