"""Sentence-embedding HTTP service.

A registry of named models served behind two JSON endpoints:
POST /embed and GET /models. See app.py for the wire protocol.
"""
from .app import BATCH_LIMIT, create_app, normalize_rows
from .registry import (
    DEFAULT_MODELS,
    Encoder,
    HashEncoder,
    ModelLoading,
    ModelMisconfigured,
    ModelRegistry,
    ModelSpec,
    RegistryError,
    UnknownModel,
    default_registry,
    demo_registry,
)

__version__ = "0.1.0"

__all__ = [
    "BATCH_LIMIT",
    "DEFAULT_MODELS",
    "Encoder",
    "HashEncoder",
    "ModelLoading",
    "ModelMisconfigured",
    "ModelRegistry",
    "ModelSpec",
    "RegistryError",
    "UnknownModel",
    "__version__",
    "create_app",
    "default_registry",
    "demo_registry",
    "normalize_rows",
]
