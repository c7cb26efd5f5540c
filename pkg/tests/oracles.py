"""Independent oracles for the acceptance suite.

Everything here is deliberately written against the *contract*, not the
implementation: pure Python, direct summation, full sorts. The package
under test must agree with these; if they diverge, the package is wrong,
not this file.
"""
from __future__ import annotations

import hashlib
import math
import re

# --- exhaustive top-k ---------------------------------------------------------

def topk_oracle(
    ids: list[str], vectors: list[list[float]], query: list[float], k: int
) -> list[tuple[str, float]]:
    """Score every entry by direct summation, full-sort, slice.

    Ties break by ascending id, matching the documented index rule.
    """
    scored = []
    for cid, vec in zip(ids, vectors):
        score = math.fsum(a * b for a, b in zip(vec, query))
        scored.append((cid, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


# --- chunk-count formula ------------------------------------------------------

def expected_chunk_count(docs, chunk_level: str, include_text: bool, count_sentences) -> int:
    """Closed-form chunk count for a corpus under one representation.

    ROW level: rows + 1 (header) + 1 if captioned, per table.
    TABLE level: 1 + 1 if captioned, per table.
    Plus one chunk per sentence of every paragraph when include_text.
    ``count_sentences`` maps a paragraph text to its sentence count.
    """
    total = 0
    for doc in docs:
        for block in doc.blocks:
            table = getattr(block, "table", None)
            if table is not None:
                captioned = 1 if table.caption is not None else 0
                if chunk_level == "row":
                    total += len(table.rows) + 1 + captioned
                else:
                    total += 1 + captioned
            elif hasattr(block, "level"):
                continue  # headings never chunk
            elif include_text:
                total += count_sentences(block.text)
    return total


# --- independent hash embedder ------------------------------------------------
# Re-derived from the documented contract: lowercase alphanumeric token runs,
# keyed 64-bit blake2b bucket assignment, L2-normalized counts.

_TOKEN = re.compile(r"[a-z0-9]+")
_HASH_KEY = b"tabrag-hash-embed-v1"


def oracle_tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def oracle_bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=_HASH_KEY).digest()
    return int.from_bytes(digest, "big") % dim


def oracle_embed(text: str, dim: int) -> list[float]:
    counts = [0.0] * dim
    for token in oracle_tokens(text):
        counts[oracle_bucket(token, dim)] += 1.0
    norm = math.sqrt(math.fsum(c * c for c in counts))
    if norm == 0.0:
        raise ValueError("no tokens")
    return [c / norm for c in counts]


# --- end-to-end accuracy ------------------------------------------------------

_TABLE_KINDS = frozenset({"row", "table", "header", "caption"})


def oracle_hit(top_chunks, gold_table_ids) -> bool:
    """Hit rule by enumeration over retrieved chunks."""
    for chunk in top_chunks:
        prov = chunk.provenance
        if prov.kind.value in _TABLE_KINDS and prov.table_id in set(gold_table_ids):
            return True
    return False


def oracle_accuracy(chunks, qa_items, dim: int, k: int) -> float:
    """Recompute the whole run: embed, score by direct summation, judge.

    Chunks with no alphanumeric content are excluded, mirroring the
    documented skip-at-index-build behaviour.
    """
    usable = [c for c in chunks if oracle_tokens(c.text)]
    vectors = {c.chunk_id: oracle_embed(c.text, dim) for c in usable}
    hits = 0
    for item in qa_items:
        qvec = oracle_embed(item.question, dim)
        scored = sorted(
            (
                (-math.fsum(a * b for a, b in zip(vectors[c.chunk_id], qvec)), c.chunk_id, c)
                for c in usable
            ),
            key=lambda triple: (triple[0], triple[1]),
        )
        top = [c for _, _, c in scored[:k]]
        if oracle_hit(top, item.gold_table_ids):
            hits += 1
    return 100.0 * hits / len(qa_items)
