"""The real retrieval client against a live server over loopback HTTP.

The in-process TestClient checks above exercise the app object; these
run uvicorn on a socket and drive it with the same client code the
retrieval pipeline uses, so header handling, JSON encoding and status
codes are all the production paths.
"""
import threading
import time

import numpy as np
import pytest
import requests
import uvicorn

from tabrag.embedding import embed_batch, fetch_remote_models, remote_provider
from tabrag.testing import run_protocol_checks

from embedsvc import create_app
from embedsvc.registry import HashEncoder, ModelRegistry, ModelSpec

RELEASE_SLOW_LOAD = threading.Event()
SLOW_LOAD_STARTED = threading.Event()


def _slow_load():
    SLOW_LOAD_STARTED.set()
    RELEASE_SLOW_LOAD.wait(timeout=10)
    return HashEncoder(8)


def _registry() -> ModelRegistry:
    return ModelRegistry(
        [
            ModelSpec("demo-32", 32, lambda: HashEncoder(32)),
            ModelSpec("demo-64", 64, lambda: HashEncoder(64)),
            ModelSpec("slow-8", 8, _slow_load),
        ]
    )


@pytest.fixture(scope="module")
def base_url():
    config = uvicorn.Config(
        create_app(_registry()), host="127.0.0.1", port=0, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start within 10s")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)


def test_models_listing_over_http(base_url):
    entries = fetch_remote_models(base_url)
    assert [(e["name"], e["dim"]) for e in entries] == [
        ("demo-32", 32),
        ("demo-64", 64),
        ("slow-8", 8),
    ]
    assert all(e["prefix"] == "" for e in entries)


def test_client_pipeline_embeds_through_live_service(base_url):
    provider = remote_provider("demo-32", base_url)
    assert provider.dim == 32
    texts = ["maximum latency", "jitter requirement", "coverage area"]
    vectors = embed_batch(texts, provider)
    assert [v.shape for v in vectors] == [(32,), (32,), (32,)]
    for v in vectors:
        assert abs(float(np.linalg.norm(v)) - 1.0) <= 1e-6
    again = embed_batch(texts, provider)
    for first, second in zip(vectors, again):
        np.testing.assert_array_equal(first, second)


def test_shared_protocol_suite_over_http(base_url):
    def post_embed(payload: dict):
        resp = requests.post(f"{base_url}/embed", json=payload, timeout=30)
        return resp.status_code, resp.json()

    def get_models():
        resp = requests.get(f"{base_url}/models", timeout=30)
        return resp.status_code, resp.json()

    run_protocol_checks(post_embed, get_models, "demo-64", 64)


def test_concurrent_first_load_yields_503_over_http(base_url):
    url = f"{base_url}/embed"
    results = {}

    def first_request():
        results["first"] = requests.post(
            url, json={"model": "slow-8", "texts": ["a"]}, timeout=30
        )

    thread = threading.Thread(target=first_request)
    thread.start()
    assert SLOW_LOAD_STARTED.wait(timeout=10)
    blocked = requests.post(url, json={"model": "slow-8", "texts": ["b"]}, timeout=30)
    assert blocked.status_code == 503
    assert "loading" in blocked.json()["error"]

    RELEASE_SLOW_LOAD.set()
    thread.join(timeout=10)
    assert results["first"].status_code == 200
    assert len(results["first"].json()["vectors"]) == 1
    settled = requests.post(url, json={"model": "slow-8", "texts": ["b"]}, timeout=30)
    assert settled.status_code == 200
