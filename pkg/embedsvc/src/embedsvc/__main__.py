"""Run the service under uvicorn.

Listen address and port come from EMBEDSVC_HOST / EMBEDSVC_PORT.
EMBEDSVC_DEMO_MODELS=1 swaps in the deterministic demo registry
(demo-32 / demo-64), which needs no model downloads.
"""
from __future__ import annotations

import logging
import os

import uvicorn

from .app import create_app
from .registry import default_registry, demo_registry

HOST_ENV = "EMBEDSVC_HOST"
PORT_ENV = "EMBEDSVC_PORT"
DEMO_ENV = "EMBEDSVC_DEMO_MODELS"

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8009


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    registry = demo_registry() if os.environ.get(DEMO_ENV) else default_registry()
    host = os.environ.get(HOST_ENV, DEFAULT_HOST)
    port = int(os.environ.get(PORT_ENV, str(DEFAULT_PORT)))
    logger = logging.getLogger("embedsvc")
    logger.info("serving %d models on %s:%d", len(registry), host, port)
    uvicorn.run(create_app(registry), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
