"""Normalized in-memory document model shared by the whole pipeline.

A parsed document is a flat, ordered list of blocks (headings, paragraphs,
tables). Section structure is carried by heading levels, not by nesting;
each table additionally records the heading path enclosing it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union
import re

_WS_RUN = re.compile(r"\s+")


class SchemaViolation(Exception):
    """An external file does not conform to its documented schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def normalize_whitespace(text: str) -> str:
    """Collapse internal whitespace runs to single spaces and trim."""
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True)
class Heading:
    level: int
    text: str


@dataclass(frozen=True)
class Paragraph:
    text: str


@dataclass(frozen=True)
class TableData:
    """One table: caption, single header row, rectangular body rows.

    ``rows`` excludes the header. ``section_path`` holds the enclosing
    heading texts, outermost first; it is derived from block order (see
    :func:`derive_section_paths`) and is not part of the JSON format.
    """

    table_id: str
    caption: str | None
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    section_path: tuple[str, ...] = ()


@dataclass(frozen=True)
class TableBlock:
    table: TableData


Block = Union[Heading, Paragraph, TableBlock]


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    blocks: tuple[Block, ...]


@dataclass(frozen=True)
class Violation:
    """A broken invariant, tied to the block where it was found."""

    block_index: int | None
    message: str


@dataclass(frozen=True)
class CorpusStats:
    num_documents: int
    num_tables: int
    num_sentences: int
    row_count_histogram: dict[int, int] = field(default_factory=dict)


def make_table(
    table_id: str,
    header: list[str] | tuple[str, ...],
    rows: list[list[str]] | tuple[tuple[str, ...], ...],
    caption: str | None = None,
    section_path: tuple[str, ...] = (),
) -> TableData:
    """Convenience constructor converting lists to the immutable form."""
    return TableData(
        table_id=table_id,
        caption=caption,
        header=tuple(header),
        rows=tuple(tuple(r) for r in rows),
        section_path=tuple(section_path),
    )


def derive_section_paths(blocks: list[Block] | tuple[Block, ...]) -> tuple[Block, ...]:
    """Attach to every table the most recent heading text at each level.

    A heading of level L closes all open headings of level >= L. Tables seen
    before any heading get an empty path.
    """
    out: list[Block] = []
    stack: list[Heading] = []
    for block in blocks:
        if isinstance(block, Heading):
            while stack and stack[-1].level >= block.level:
                stack.pop()
            stack.append(block)
            out.append(block)
        elif isinstance(block, TableBlock):
            path = tuple(h.text for h in stack)
            if block.table.section_path != path:
                block = TableBlock(
                    table=TableData(
                        table_id=block.table.table_id,
                        caption=block.table.caption,
                        header=block.table.header,
                        rows=block.table.rows,
                        section_path=path,
                    )
                )
            out.append(block)
        else:
            out.append(block)
    return tuple(out)


def make_document(doc_id: str, title: str, blocks: list[Block] | tuple[Block, ...]) -> Document:
    """Build a Document with section paths derived from block order."""
    return Document(doc_id=doc_id, title=title, blocks=derive_section_paths(blocks))


def validate_document(doc: Document) -> list[Violation]:
    """Check every structural invariant; violations are data, not errors."""
    violations: list[Violation] = []
    if not doc.doc_id:
        violations.append(Violation(None, "doc_id is empty"))
    seen_table_ids: dict[str, int] = {}
    for i, block in enumerate(doc.blocks):
        if isinstance(block, Heading):
            if block.level < 1:
                violations.append(Violation(i, f"heading level {block.level} < 1"))
        elif isinstance(block, TableBlock):
            t = block.table
            if not t.table_id:
                violations.append(Violation(i, "table_id is empty"))
            elif t.table_id in seen_table_ids:
                violations.append(
                    Violation(
                        i,
                        f"duplicate table_id {t.table_id!r} "
                        f"(first seen at block {seen_table_ids[t.table_id]})",
                    )
                )
            else:
                seen_table_ids[t.table_id] = i
            if len(t.header) < 1:
                violations.append(Violation(i, f"table {t.table_id!r} has empty header"))
            for r, row in enumerate(t.rows):
                if len(row) != len(t.header):
                    violations.append(
                        Violation(
                            i,
                            f"table {t.table_id!r} row {r} has {len(row)} cells, "
                            f"header has {len(t.header)}",
                        )
                    )
    return violations


def validate_corpus(docs: list[Document]) -> list[Violation]:
    """Per-document checks plus corpus-wide table_id and doc_id uniqueness."""
    violations: list[Violation] = []
    seen_docs: set[str] = set()
    seen_tables: dict[str, str] = {}
    for doc in docs:
        violations.extend(validate_document(doc))
        if doc.doc_id in seen_docs:
            violations.append(Violation(None, f"duplicate doc_id {doc.doc_id!r}"))
        seen_docs.add(doc.doc_id)
        for i, block in enumerate(doc.blocks):
            if isinstance(block, TableBlock):
                tid = block.table.table_id
                if tid in seen_tables and seen_tables[tid] != doc.doc_id:
                    violations.append(
                        Violation(
                            i,
                            f"table_id {tid!r} appears in both "
                            f"{seen_tables[tid]!r} and {doc.doc_id!r}",
                        )
                    )
                seen_tables.setdefault(tid, doc.doc_id)
    return violations


def corpus_stats(
    docs: list[Document], sentence_counter: Callable[[Paragraph], int]
) -> CorpusStats:
    """Count documents, tables, sentences and the body-row-count histogram.

    The histogram is keyed on the exact number of body rows (header
    excluded); values sum to the table count.
    """
    num_tables = 0
    num_sentences = 0
    histogram: dict[int, int] = {}
    for doc in docs:
        for block in doc.blocks:
            if isinstance(block, TableBlock):
                num_tables += 1
                n = len(block.table.rows)
                histogram[n] = histogram.get(n, 0) + 1
            elif isinstance(block, Paragraph):
                num_sentences += sentence_counter(block)
    return CorpusStats(
        num_documents=len(docs),
        num_tables=num_tables,
        num_sentences=num_sentences,
        row_count_histogram=histogram,
    )
