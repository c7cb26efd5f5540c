"""Chunk corpus construction: sentence splitting and table serialization.

Tables are rendered under a 2^4 grid of representations: chunk level
(whole table vs one chunk per row) x column separator (pipe vs space)
x header repetition in every cell x inclusion of free-flowing text.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

from .docmodel import (
    Document,
    Paragraph,
    TableBlock,
    TableData,
    validate_corpus,
)


class ChunkLevel(str, Enum):
    TABLE = "table"
    ROW = "row"


class Separator(str, Enum):
    PIPE = "pipe"
    SPACE = "space"

    @property
    def joiner(self) -> str:
        return " | " if self is Separator.PIPE else " "


class ChunkKind(str, Enum):
    ROW = "row"
    TABLE = "table"
    HEADER = "header"
    CAPTION = "caption"
    SENTENCE = "sentence"


@dataclass(frozen=True)
class ReprConfig:
    """One cell of the representation grid."""

    chunk_level: ChunkLevel
    separator: Separator
    repeat_header: bool
    include_text: bool

    @property
    def label(self) -> str:
        rh = "rh" if self.repeat_header else "norh"
        it = "text" if self.include_text else "notext"
        return f"{self.chunk_level.value}-{self.separator.value}-{rh}-{it}"


def all_configs() -> tuple[ReprConfig, ...]:
    """The 16 grid cells in fixed enumeration order.

    chunk_level is the major axis, then separator, then repeat_header,
    then include_text; booleans enumerate False before True.
    """
    return tuple(
        ReprConfig(chunk_level=cl, separator=sep, repeat_header=rh, include_text=it)
        for cl in ChunkLevel
        for sep in Separator
        for rh in (False, True)
        for it in (False, True)
    )


@dataclass(frozen=True)
class Provenance:
    doc_id: str
    kind: ChunkKind
    table_id: str | None = None
    row_index: int | None = None


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    text: str
    provenance: Provenance


# --- sentence splitting -------------------------------------------------

# Terminal punctuation ends a sentence only when followed by whitespace and
# an uppercase letter or digit; internal dots in clause numbers ("5.1.2")
# never precede whitespace so they never split.
_TERMINAL_RUN = re.compile(r"[.!?]+")

_ABBREVIATIONS = frozenset(
    {
        "etc.", "e.g.", "i.e.", "fig.", "figs.", "no.", "nos.", "cf.",
        "vs.", "al.", "approx.", "resp.", "incl.", "excl.", "max.",
        "min.", "sec.", "ref.", "rel.", "ch.", "para.", "eq.", "eqs.",
        "tab.", "vol.", "ed.", "rev.",
    }
)


def _trailing_word(text: str, end: int) -> str:
    i = end
    while i > 0 and not text[i - 1].isspace():
        i -= 1
    return text[i:end].lstrip("([{\"'")


def split_sentences(text: str) -> list[str]:
    """Rule-based sentence splitter for technical prose.

    Every non-whitespace character of the input appears in exactly one
    output sentence; empty and whitespace-only inputs yield no sentences.
    """
    boundaries: list[int] = []
    n = len(text)
    for m in _TERMINAL_RUN.finditer(text):
        end = m.end()
        if end >= n or not text[end].isspace():
            continue
        j = end
        while j < n and text[j].isspace():
            j += 1
        if j >= n:
            continue
        if not (text[j].isupper() or text[j].isdigit()):
            continue
        if _trailing_word(text, end).lower() in _ABBREVIATIONS:
            continue
        boundaries.append(end)

    sentences: list[str] = []
    start = 0
    for b in boundaries + [n]:
        piece = text[start:b].strip()
        if piece:
            sentences.append(piece)
        start = b
    return sentences


# --- table serialization ------------------------------------------------

def render_cell(header: str, value: str, repeat_header: bool) -> str:
    return f"{header}: {value}" if repeat_header else value


def serialize_row(table: TableData, row_index: int, cfg: ReprConfig) -> str:
    """Render one body row, cells in column order."""
    if not 0 <= row_index < len(table.rows):
        raise IndexError(
            f"row_index {row_index} out of range for table {table.table_id!r} "
            f"with {len(table.rows)} rows"
        )
    row = table.rows[row_index]
    cells = [
        render_cell(header, value, cfg.repeat_header)
        for header, value in zip(table.header, row)
    ]
    return cfg.separator.joiner.join(cells)


def serialize_header(table: TableData, cfg: ReprConfig) -> str:
    # Header cells never repeat against themselves.
    return cfg.separator.joiner.join(table.header)


def serialize_table(table: TableData, cfg: ReprConfig) -> str:
    """Render a whole table: caption line, header line, then body rows."""
    if cfg.chunk_level is not ChunkLevel.TABLE:
        raise ValueError("serialize_table requires a TABLE-level config")
    lines: list[str] = []
    if table.caption is not None:
        lines.append(table.caption)
    lines.append(serialize_header(table, cfg))
    for i in range(len(table.rows)):
        lines.append(serialize_row(table, i, cfg))
    return "\n".join(lines)


# --- corpus construction ------------------------------------------------

def _table_chunks(doc_id: str, table: TableData, cfg: ReprConfig) -> list[Chunk]:
    chunks: list[Chunk] = []
    tid = table.table_id
    if cfg.chunk_level is ChunkLevel.ROW:
        chunks.append(
            Chunk(
                chunk_id=f"{tid}/header",
                text=serialize_header(table, cfg),
                provenance=Provenance(doc_id=doc_id, kind=ChunkKind.HEADER, table_id=tid),
            )
        )
        for i in range(len(table.rows)):
            chunks.append(
                Chunk(
                    chunk_id=f"{tid}/row/{i:04d}",
                    text=serialize_row(table, i, cfg),
                    provenance=Provenance(
                        doc_id=doc_id, kind=ChunkKind.ROW, table_id=tid, row_index=i
                    ),
                )
            )
    else:
        chunks.append(
            Chunk(
                chunk_id=f"{tid}/table",
                text=serialize_table(table, cfg),
                provenance=Provenance(doc_id=doc_id, kind=ChunkKind.TABLE, table_id=tid),
            )
        )
    if table.caption is not None:
        chunks.append(
            Chunk(
                chunk_id=f"{tid}/caption",
                text=table.caption,
                provenance=Provenance(doc_id=doc_id, kind=ChunkKind.CAPTION, table_id=tid),
            )
        )
    return chunks


def build_corpus(docs: list[Document], cfg: ReprConfig) -> list[Chunk]:
    """Produce the embeddable chunk list for one representation config.

    Chunks follow document order. Per table: ROW level emits one header
    chunk, one chunk per body row and a caption chunk when present; TABLE
    level emits a single table chunk (caption embedded) plus the separate
    caption chunk. Paragraph sentences are included only when
    ``cfg.include_text`` is set; caption paragraphs were already consumed
    at ingestion and never reach this point.
    """
    violations = validate_corpus(docs)
    if violations:
        detail = "; ".join(v.message for v in violations[:5])
        raise ValueError(f"corpus failed validation ({len(violations)} violations): {detail}")

    chunks: list[Chunk] = []
    for doc in docs:
        sentence_no = 0
        for block in doc.blocks:
            if isinstance(block, TableBlock):
                chunks.extend(_table_chunks(doc.doc_id, block.table, cfg))
            elif isinstance(block, Paragraph) and cfg.include_text:
                for sentence in split_sentences(block.text):
                    chunks.append(
                        Chunk(
                            chunk_id=f"{doc.doc_id}/sent/{sentence_no:05d}",
                            text=sentence,
                            provenance=Provenance(doc_id=doc.doc_id, kind=ChunkKind.SENTENCE),
                        )
                    )
                    sentence_no += 1
    return chunks


# --- chunk corpus file format (JSON Lines) -------------------------------

def chunk_to_json(chunk: Chunk) -> str:
    p = chunk.provenance
    return json.dumps(
        {
            "chunk_id": chunk.chunk_id,
            "text": chunk.text,
            "doc_id": p.doc_id,
            "table_id": p.table_id,
            "row_index": p.row_index,
            "kind": p.kind.value,
        },
        ensure_ascii=False,
    )


def chunks_to_jsonl(chunks: list[Chunk]) -> str:
    return "".join(chunk_to_json(c) + "\n" for c in chunks)


def chunks_from_jsonl(text: str) -> list[Chunk]:
    chunks = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            chunks.append(
                Chunk(
                    chunk_id=obj["chunk_id"],
                    text=obj["text"],
                    provenance=Provenance(
                        doc_id=obj["doc_id"],
                        kind=ChunkKind(obj["kind"]),
                        table_id=obj["table_id"],
                        row_index=obj["row_index"],
                    ),
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ValueError(f"bad chunk record at line {line_no}: {exc}") from exc
    return chunks
