"""Table-aware document retrieval benchmark.

Parses .docx documents into a normalized text+table model, serializes
tables under a grid of representation choices, embeds chunks with
unit-norm vectors, and scores question sets by whether retrieval
surfaces a chunk of the correct table.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .chunking import (
    Chunk,
    ChunkKind,
    ChunkLevel,
    Provenance,
    ReprConfig,
    Separator,
    all_configs,
    build_corpus,
    chunks_from_jsonl,
    chunks_to_jsonl,
    serialize_header,
    serialize_row,
    serialize_table,
    split_sentences,
)
from .docmodel import (
    CorpusStats,
    Document,
    Heading,
    Paragraph,
    SchemaViolation,
    TableBlock,
    TableData,
    corpus_stats,
    make_document,
    make_table,
    validate_corpus,
    validate_document,
)
from .embedding import (
    EmbeddingCache,
    EmbeddingError,
    ProviderDescriptor,
    ProviderKind,
    embed_batch,
    fetch_remote_models,
    hash_embed,
    local_hash_provider,
    normalize,
    remote_provider,
)
from .evaluation import (
    QAItem,
    RunReport,
    best_cell,
    build_index_from_chunks,
    emit_report,
    evaluate_run,
    judge_hit,
    load_qa,
    run_grid,
)
from .ingest import IngestError, load_normalized, parse_docx, save_normalized
from .vecindex import SearchHit, VectorIndex

__all__ = [
    "__version__",
    # document model
    "Document", "Heading", "Paragraph", "TableBlock", "TableData",
    "CorpusStats", "SchemaViolation",
    "make_document", "make_table", "validate_document", "validate_corpus",
    "corpus_stats",
    # ingestion
    "IngestError", "parse_docx", "save_normalized", "load_normalized",
    # chunking
    "Chunk", "ChunkKind", "ChunkLevel", "Separator", "ReprConfig",
    "Provenance", "all_configs", "build_corpus", "split_sentences",
    "serialize_row", "serialize_table", "serialize_header",
    "chunks_to_jsonl", "chunks_from_jsonl",
    # embedding
    "EmbeddingCache", "EmbeddingError", "ProviderDescriptor", "ProviderKind",
    "embed_batch", "hash_embed", "normalize", "local_hash_provider",
    "remote_provider", "fetch_remote_models",
    # index
    "VectorIndex", "SearchHit",
    # evaluation
    "QAItem", "RunReport", "load_qa", "judge_hit", "evaluate_run",
    "run_grid", "emit_report", "best_cell", "build_index_from_chunks",
]
