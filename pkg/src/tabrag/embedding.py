"""Embedding providers: a deterministic local hash embedder and a remote
HTTP client, both returning unit-L2-norm float64 vectors.

Vectors are plain numpy arrays. Unit norm makes cosine similarity equal
to the dot product, which the vector index relies on.
"""
from __future__ import annotations

import hashlib
import logging
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

logger = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-6
# Remote vectors drifting further than this from unit norm (before the
# client re-normalizes) indicate a provider contract change worth logging.
NORM_DRIFT_WARN = 1e-3

REMOTE_BATCH_LIMIT = 128
REMOTE_RETRIES = 3


class EmbeddingError(Exception):
    pass


class EmptyText(EmbeddingError):
    def __init__(self, index: int):
        super().__init__(f"text at position {index} is empty")
        self.index = index


class NoTokens(EmbeddingError):
    pass


class ZeroVector(EmbeddingError):
    pass


class DimensionMismatch(EmbeddingError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected dimension {expected}, got {got}")
        self.expected = expected
        self.got = got


class RemoteUnavailable(EmbeddingError):
    pass


class ProviderKind(str, Enum):
    LOCAL_HASH = "local_hash"
    REMOTE = "remote"


@dataclass(frozen=True)
class ProviderDescriptor:
    name: str
    dim: int
    kind: ProviderKind
    base_url: str | None = None


def local_hash_provider(dim: int = 256) -> ProviderDescriptor:
    return ProviderDescriptor(name=f"local-hash-{dim}", dim=dim, kind=ProviderKind.LOCAL_HASH)


def normalize(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; idempotent on already-unit vectors."""
    v = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("cannot normalize the zero vector")
    return v / norm


def is_unit(v: np.ndarray, tol: float = UNIT_NORM_TOL) -> bool:
    return abs(float(np.linalg.norm(v)) - 1.0) <= tol


# --- deterministic local hash embedder -----------------------------------

# Keyed blake2b keeps bucket assignment stable across platforms and runs;
# the key doubles as the published seed of the scheme.
_HASH_SEED = b"tabrag-hash-embed-v1"
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs; the token multiset defines the vector."""
    return _TOKEN_RE.findall(text.lower())


def token_bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=_HASH_SEED).digest()
    return int.from_bytes(digest, "big") % dim


def hash_embed(text: str, dim: int) -> np.ndarray:
    """Bucket-count embedding: hash each token into [0, dim), L2-normalize."""
    if dim < 8:
        raise ValueError(f"dim must be >= 8, got {dim}")
    tokens = tokenize(text)
    if not tokens:
        raise NoTokens(f"no alphanumeric content in {text!r}")
    counts = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        counts[token_bucket(token, dim)] += 1.0
    return normalize(counts)


# --- embedding cache ------------------------------------------------------

def _text_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbeddingCache:
    """In-memory vector cache keyed by (provider name, text content hash).

    Safe for concurrent readers; writes are serialized by a lock. Persists
    to a .npz file alongside the index.
    """

    def __init__(self) -> None:
        self._data: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._data)

    @staticmethod
    def _key(provider_name: str, text: str) -> str:
        return f"{provider_name}::{_text_key(text)}"

    def get(self, provider_name: str, text: str) -> np.ndarray | None:
        return self._data.get(self._key(provider_name, text))

    def put(self, provider_name: str, text: str, vector: np.ndarray) -> None:
        with self._lock:
            self._data[self._key(provider_name, text)] = np.asarray(vector, dtype=np.float64)

    def save(self, path: str | Path) -> None:
        with self._lock:
            np.savez_compressed(path, **self._data)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingCache":
        cache = cls()
        with np.load(path) as data:
            for key in data.files:
                cache._data[key] = np.asarray(data[key], dtype=np.float64)
        return cache


# --- batch embedding ------------------------------------------------------

def _remote_post(url: str, payload: dict, retry_wait: float) -> dict:
    last_error = ""
    for attempt in range(REMOTE_RETRIES + 1):
        try:
            resp = requests.post(url, json=payload, timeout=60)
        except requests.RequestException as exc:
            last_error = str(exc)
        else:
            if resp.status_code == 200:
                return resp.json()
            try:
                last_error = resp.json().get("error", resp.text)
            except ValueError:
                last_error = resp.text
            if 400 <= resp.status_code < 500:
                # Client-side protocol errors will not heal on retry.
                raise RemoteUnavailable(f"embedding service rejected request: {last_error}")
        if attempt < REMOTE_RETRIES:
            time.sleep(retry_wait * (2**attempt))
    raise RemoteUnavailable(f"embedding service unreachable after {REMOTE_RETRIES} retries: {last_error}")


def _embed_remote_batch(
    texts: list[str], provider: ProviderDescriptor, retry_wait: float
) -> list[np.ndarray]:
    assert provider.base_url, "remote provider requires base_url"
    vectors: list[np.ndarray] = []
    for start in range(0, len(texts), REMOTE_BATCH_LIMIT):
        part = texts[start : start + REMOTE_BATCH_LIMIT]
        body = _remote_post(
            provider.base_url.rstrip("/") + "/embed",
            {"model": provider.name, "texts": part},
            retry_wait,
        )
        got_dim = int(body.get("dim", -1))
        if got_dim != provider.dim:
            raise DimensionMismatch(provider.dim, got_dim)
        raw = body.get("vectors", [])
        if len(raw) != len(part):
            raise RemoteUnavailable(
                f"embedding service returned {len(raw)} vectors for {len(part)} texts"
            )
        for i, values in enumerate(raw):
            v = np.asarray(values, dtype=np.float64)
            if v.shape != (provider.dim,):
                raise DimensionMismatch(provider.dim, int(v.shape[0]) if v.ndim == 1 else -1)
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > NORM_DRIFT_WARN:
                logger.warning(
                    "provider %s returned vector with norm %.6f for text %d; re-normalizing",
                    provider.name,
                    norm,
                    start + i,
                )
            vectors.append(normalize(v))
    return vectors


def embed_batch(
    texts: Sequence[str],
    provider: ProviderDescriptor,
    cache: EmbeddingCache | None = None,
    retry_wait: float = 0.5,
) -> list[np.ndarray]:
    """Embed texts in order; every returned vector has unit L2 norm.

    Identical texts map to identical vectors within a provider. With a
    cache, only cache misses are computed (or sent over the wire); results
    are written back so grid runs re-embed shared sentences once.
    """
    texts = list(texts)
    for i, text in enumerate(texts):
        if text == "":
            raise EmptyText(i)

    out: list[np.ndarray | None] = [None] * len(texts)
    misses: list[int] = []
    for i, text in enumerate(texts):
        if cache is not None:
            hit = cache.get(provider.name, text)
            if hit is not None:
                out[i] = hit
                continue
        misses.append(i)

    if misses:
        if provider.kind is ProviderKind.LOCAL_HASH:
            computed = [hash_embed(texts[i], provider.dim) for i in misses]
        else:
            computed = _embed_remote_batch([texts[i] for i in misses], provider, retry_wait)
        for i, v in zip(misses, computed):
            out[i] = v
            if cache is not None:
                cache.put(provider.name, texts[i], v)

    return [v for v in out]  # type: ignore[misc]


def fetch_remote_models(base_url: str, retry_wait: float = 0.5) -> list[dict]:
    """GET /models from an embedding service; returns its registry entries."""
    url = base_url.rstrip("/") + "/models"
    last_error = ""
    for attempt in range(REMOTE_RETRIES + 1):
        try:
            resp = requests.get(url, timeout=30)
            if resp.status_code == 200:
                return resp.json().get("models", [])
            last_error = resp.text
        except requests.RequestException as exc:
            last_error = str(exc)
        if attempt < REMOTE_RETRIES:
            time.sleep(retry_wait * (2**attempt))
    raise RemoteUnavailable(f"cannot list models at {url}: {last_error}")


def remote_provider(name: str, base_url: str, retry_wait: float = 0.5) -> ProviderDescriptor:
    """Build a REMOTE descriptor, resolving the dimension via GET /models."""
    for entry in fetch_remote_models(base_url, retry_wait):
        if entry.get("name") == name:
            return ProviderDescriptor(
                name=name, dim=int(entry["dim"]), kind=ProviderKind.REMOTE, base_url=base_url
            )
    raise RemoteUnavailable(f"model {name!r} not registered at {base_url}")


def embeddable(texts_or_chunks: Iterable, get_text=lambda c: c.text) -> list:
    """Filter out items whose text has no alphanumeric content.

    Token-free chunks (for example fully empty table rows) cannot be
    retrieved meaningfully and would fail the hash embedder; callers that
    build indices drop them with a count rather than erroring out.
    """
    return [item for item in texts_or_chunks if tokenize(get_text(item))]
