from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tabrag.embedding import (
    EmbeddingCache,
    EmptyText,
    NoTokens,
    ZeroVector,
    embed_batch,
    embeddable,
    hash_embed,
    is_unit,
    local_hash_provider,
    normalize,
    token_bucket,
    tokenize,
)

DIM = 64


def test_normalize_three_four_five():
    np.testing.assert_allclose(normalize([3.0, 4.0]), [0.6, 0.8])


def test_normalize_idempotent():
    v = normalize([1.0, 2.0, 2.0])
    np.testing.assert_allclose(normalize(v), v, rtol=0, atol=1e-15)


def test_normalize_zero_vector():
    with pytest.raises(ZeroVector):
        normalize([0.0, 0.0])


def test_tokenize_lowercase_alnum_runs():
    assert tokenize("Latency: 10 ms (UK-Home)") == ["latency", "10", "ms", "uk", "home"]
    assert tokenize("???") == []


def test_hash_embed_deterministic():
    np.testing.assert_array_equal(hash_embed("alpha beta", DIM), hash_embed("alpha beta", DIM))


def test_hash_embed_scalar_multiple_same_direction():
    a = hash_embed("a a", DIM)
    b = hash_embed("a", DIM)
    assert float(a @ b) == pytest.approx(1.0, abs=1e-12)


def test_hash_embed_token_order_irrelevant():
    np.testing.assert_array_equal(hash_embed("alpha beta", DIM), hash_embed("beta  ALPHA", DIM))


def test_hash_embed_collision_free_tokens_orthogonal():
    # Verify bucket disjointness directly, then assert exact orthogonality.
    left, right = ["alpha", "beta"], ["gamma", "delta"]
    buckets = {t: token_bucket(t, DIM) for t in left + right}
    assert len(set(buckets.values())) == 4, f"bucket collision at dim {DIM}: {buckets}"
    dot = hash_embed(" ".join(left), DIM) @ hash_embed(" ".join(right), DIM)
    assert float(dot) == 0.0


def test_hash_embed_no_tokens():
    with pytest.raises(NoTokens):
        hash_embed("???", DIM)


def test_hash_embed_rejects_tiny_dim():
    with pytest.raises(ValueError):
        hash_embed("x", 7)


def test_token_bucket_in_range_and_stable():
    assert 0 <= token_bucket("latency", DIM) < DIM
    assert token_bucket("latency", DIM) == token_bucket("latency", DIM)


@given(st.text(min_size=1, max_size=80))
def test_hash_embed_unit_norm(text):
    if not tokenize(text):
        return
    v = hash_embed(text, DIM)
    assert is_unit(v)
    assert abs(float(np.linalg.norm(v)) - 1.0) <= 1e-6


def test_embed_batch_order_and_determinism():
    provider = local_hash_provider(DIM)
    vectors = embed_batch(["alpha", "beta", "alpha"], provider)
    assert len(vectors) == 3
    np.testing.assert_array_equal(vectors[0], vectors[2])
    assert not np.array_equal(vectors[0], vectors[1])


def test_embed_batch_empty_text_error_names_position():
    provider = local_hash_provider(DIM)
    with pytest.raises(EmptyText) as exc_info:
        embed_batch(["x", ""], provider)
    assert exc_info.value.index == 1


def test_embed_batch_cache_transparent():
    provider = local_hash_provider(DIM)
    texts = ["one two", "three", "one two"]
    plain = embed_batch(texts, provider)
    cache = EmbeddingCache()
    cached_cold = embed_batch(texts, provider, cache)
    cached_warm = embed_batch(texts, provider, cache)
    for a, b, c in zip(plain, cached_cold, cached_warm):
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(a, c)
    assert len(cache) == 2  # two distinct texts


def test_cache_is_per_provider():
    cache = EmbeddingCache()
    p64 = local_hash_provider(64)
    p128 = local_hash_provider(128)
    embed_batch(["same text"], p64, cache)
    vectors = embed_batch(["same text"], p128, cache)
    assert vectors[0].shape == (128,)
    assert len(cache) == 2


def test_cache_round_trips_through_npz(tmp_path):
    cache = EmbeddingCache()
    provider = local_hash_provider(DIM)
    original = embed_batch(["alpha", "beta"], provider, cache)
    path = tmp_path / "cache.npz"
    cache.save(path)
    reloaded = EmbeddingCache.load(path)
    assert len(reloaded) == 2
    again = embed_batch(["alpha", "beta"], provider, reloaded)
    for a, b in zip(original, again):
        np.testing.assert_array_equal(a, b)


def test_embeddable_filters_token_free_items():
    class Item:
        def __init__(self, text):
            self.text = text

    items = [Item("real text"), Item("???"), Item(""), Item("42")]
    kept = embeddable(items)
    assert [i.text for i in kept] == ["real text", "42"]
    assert embeddable(["a", "-", "b"], get_text=lambda s: s) == ["a", "b"]
