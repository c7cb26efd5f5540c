"""Model registry: named sentence-embedding models, loaded lazily.

The registry is the single shared, read-only piece of service state.
Construction is cheap — model weights are only pulled in when a name is
first asked to encode something — so listing models never blocks on a
download. Request handlers treat entries as immutable; the only mutation
after construction is the one-time install of a loaded handle, guarded
by a per-model lock.
"""
from __future__ import annotations

import hashlib
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

logger = logging.getLogger("embedsvc.registry")


class RegistryError(Exception):
    pass


class UnknownModel(RegistryError):
    def __init__(self, name: str):
        super().__init__(f"unknown model {name!r}")
        self.name = name


class ModelLoading(RegistryError):
    """Someone else is currently loading this model; retry shortly."""

    def __init__(self, name: str):
        super().__init__(f"model {name!r} is loading")
        self.name = name


class ModelMisconfigured(RegistryError):
    """The loaded model's behaviour contradicts its registry entry."""


class Encoder(Protocol):
    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


LoaderFn = Callable[[], Encoder]


@dataclass(frozen=True)
class ModelSpec:
    """One registry row.

    ``prefix`` is prepended verbatim to every text before encoding (empty
    by default); it is advertised through ``GET /models`` so callers can
    see exactly what a model does to their inputs.
    """

    name: str
    dim: int
    loader: LoaderFn
    prefix: str = ""


@dataclass
class _Entry:
    spec: ModelSpec
    handle: Encoder | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class ModelRegistry:
    def __init__(self, specs: Iterable[ModelSpec]):
        self._entries: dict[str, _Entry] = {}
        for spec in specs:
            if spec.name in self._entries:
                raise ValueError(f"duplicate model name {spec.name!r}")
            if spec.dim <= 0:
                raise ValueError(f"model {spec.name!r} has non-positive dim {spec.dim}")
            self._entries[spec.name] = _Entry(spec)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def specs(self) -> tuple[ModelSpec, ...]:
        """Registry rows in registration order."""
        return tuple(entry.spec for entry in self._entries.values())

    def dim(self, name: str) -> int:
        return self._spec(name).dim

    def is_loaded(self, name: str) -> bool:
        return self._entry(name).handle is not None

    def encode(self, name: str, texts: Sequence[str]) -> np.ndarray:
        """Raw (un-normalized) vectors for ``texts``, one row per text.

        Loads the model on first use. Raises ModelLoading when another
        request currently holds the load lock, and ModelMisconfigured
        when the model's actual output shape disagrees with the
        advertised dimension.
        """
        entry = self._entry(name)
        spec = entry.spec
        encoder = self._encoder(entry)
        inputs = [spec.prefix + t for t in texts] if spec.prefix else list(texts)
        raw = np.asarray(encoder.encode(inputs), dtype=np.float64)
        if raw.ndim != 2 or raw.shape[0] != len(inputs):
            raise ModelMisconfigured(
                f"model {name!r} returned shape {raw.shape} for {len(inputs)} texts"
            )
        if raw.shape[1] != spec.dim:
            raise ModelMisconfigured(
                f"model {name!r} advertises dim {spec.dim} but produced {raw.shape[1]}"
            )
        return raw

    def _spec(self, name: str) -> ModelSpec:
        return self._entry(name).spec

    def _entry(self, name: str) -> _Entry:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownModel(name) from None

    def _encoder(self, entry: _Entry) -> Encoder:
        handle = entry.handle
        if handle is not None:
            return handle
        if not entry.lock.acquire(blocking=False):
            raise ModelLoading(entry.spec.name)
        try:
            if entry.handle is None:
                logger.info("loading model %s (dim %d)", entry.spec.name, entry.spec.dim)
                entry.handle = entry.spec.loader()
            return entry.handle
        finally:
            entry.lock.release()


class _SentenceTransformerEncoder:
    """Minimal Encoder facade over a loaded sentence-transformers model."""

    def __init__(self, model):
        self._model = model

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        raw = self._model.encode(
            list(texts),
            convert_to_numpy=True,
            normalize_embeddings=False,
            show_progress_bar=False,
        )
        return np.asarray(raw, dtype=np.float64)


def _transformer_loader(checkpoint: str) -> LoaderFn:
    def load() -> Encoder:
        from sentence_transformers import SentenceTransformer  # heavy; deferred

        return _SentenceTransformerEncoder(SentenceTransformer(checkpoint))

    return load


# name -> (dim, checkpoint); pooling is whatever each checkpoint's own
# config ships with, and no instruction prefix is configured by default.
DEFAULT_MODELS: tuple[tuple[str, int, str], ...] = (
    ("all-mpnet-base-v2", 768, "sentence-transformers/all-mpnet-base-v2"),
    ("all-MiniLM-L6-v2", 384, "sentence-transformers/all-MiniLM-L6-v2"),
    ("bge-large-en", 1024, "BAAI/bge-large-en"),
    ("llm-embedder", 1024, "BAAI/llm-embedder"),
    ("bge-m3", 1024, "BAAI/bge-m3"),
)


def default_registry() -> ModelRegistry:
    return ModelRegistry(
        ModelSpec(name, dim, _transformer_loader(checkpoint))
        for name, dim, checkpoint in DEFAULT_MODELS
    )


class HashEncoder:
    """Deterministic stand-in encoder: text -> seeded gaussian vector.

    Rows are intentionally not unit-norm so the service's own
    normalization is observable. Useful for protocol tests and for
    running the service without downloading any weights.
    """

    def __init__(self, dim: int):
        self.dim = dim

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        rows = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            rows[i] = rng.standard_normal(self.dim)
        return rows


def demo_registry() -> ModelRegistry:
    """Small deterministic registry; serves instantly, no downloads."""
    return ModelRegistry(
        [
            ModelSpec("demo-32", 32, lambda: HashEncoder(32)),
            ModelSpec("demo-64", 64, lambda: HashEncoder(64)),
        ]
    )
