"""Reusable conformance checks for the embedding service wire protocol.

Both sides of the wire run the same suite: this package's remote client
is tested against a mock server, and any real service implementation can
import ``run_protocol_checks`` and point it at itself (for example via an
in-process test client). Transports are injected as plain callables so
the suite stays framework-agnostic.

POST /embed  {"model": str, "texts": [str]} -> 200 {"dim": int, "vectors": [[float]]}
GET  /models -> 200 {"models": [{"name": str, "dim": int}]}
Errors carry {"error": str} with status 400 (bad request) or 503 (model
not loadable).
"""
from __future__ import annotations

import math
from typing import Callable

PostEmbed = Callable[[dict], tuple[int, dict]]
GetModels = Callable[[], tuple[int, dict]]

BATCH_LIMIT = 128


def _norm(vector: list[float]) -> float:
    return math.sqrt(math.fsum(x * x for x in vector))


def check_models_listing(get_models: GetModels, model: str, dim: int) -> None:
    status, body = get_models()
    assert status == 200, f"GET /models returned {status}"
    assert set(body) == {"models"}, f"unexpected /models body keys: {sorted(body)}"
    entries = body["models"]
    assert isinstance(entries, list)
    for entry in entries:
        assert isinstance(entry["name"], str) and entry["name"]
        assert isinstance(entry["dim"], int) and entry["dim"] > 0
    by_name = {entry["name"]: entry["dim"] for entry in entries}
    assert by_name.get(model) == dim, f"model {model!r} not listed with dim {dim}"


def check_embed_shape(post_embed: PostEmbed, model: str, dim: int) -> None:
    status, body = post_embed({"model": model, "texts": ["hello world"]})
    assert status == 200, f"POST /embed returned {status}: {body}"
    assert set(body) == {"dim", "vectors"}, f"unexpected body keys: {sorted(body)}"
    assert body["dim"] == dim
    assert len(body["vectors"]) == 1
    vector = body["vectors"][0]
    assert len(vector) == dim
    assert all(isinstance(x, float) for x in vector)


def check_normalization(post_embed: PostEmbed, model: str) -> None:
    texts = ["maximum latency", "jitter requirement", "5G coverage area"]
    status, body = post_embed({"model": model, "texts": texts})
    assert status == 200
    for i, vector in enumerate(body["vectors"]):
        norm = _norm(vector)
        assert abs(norm - 1.0) <= 1e-6, f"vector {i} has norm {norm}"


def check_determinism_and_order(post_embed: PostEmbed, model: str) -> None:
    texts = ["alpha", "beta", "alpha"]
    status, body = post_embed({"model": model, "texts": texts})
    assert status == 200
    vectors = body["vectors"]
    assert len(vectors) == len(texts), "vector count must equal text count"
    assert vectors[0] == vectors[2], "identical texts must embed identically"


def _expect_error(status: int, body: dict, expected_status: int, what: str) -> None:
    assert status == expected_status, f"{what}: expected {expected_status}, got {status}"
    assert isinstance(body.get("error"), str) and body["error"], f"{what}: missing error body"


def check_error_codes(post_embed: PostEmbed, model: str) -> None:
    status, body = post_embed({"model": "no-such-model", "texts": ["x"]})
    _expect_error(status, body, 400, "unknown model")

    status, body = post_embed({"model": model, "texts": []})
    _expect_error(status, body, 400, "empty text list")

    status, body = post_embed({"model": model, "texts": ["x"] * (BATCH_LIMIT + 1)})
    _expect_error(status, body, 400, "oversize batch")

    status, body = post_embed({"model": model, "texts": ["ok", ""]})
    _expect_error(status, body, 400, "empty string item")


def run_protocol_checks(post_embed: PostEmbed, get_models: GetModels, model: str, dim: int) -> None:
    """Run the full conformance suite against one registered model."""
    check_models_listing(get_models, model, dim)
    check_embed_shape(post_embed, model, dim)
    check_normalization(post_embed, model)
    check_determinism_and_order(post_embed, model)
    check_error_codes(post_embed, model)
