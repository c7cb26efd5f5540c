"""OOXML (.docx) ingestion and the normalized document JSON format.

Parsing walks the body-level paragraph and table elements in order,
turns heading-styled paragraphs into section headings, takes the first
row of every table as its header, and assigns captions by the
preceding-paragraph heuristic: a paragraph whose trimmed text starts
with "table" (case-insensitive) immediately before a table is that
table's caption and is not emitted again as free text.

Page headers and footers live in separate archive parts and are never
read. Images and equations are dropped with their runs.
"""
from __future__ import annotations

import hashlib
import io
import json
import re
import zipfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .docmodel import (
    Block,
    Document,
    Heading,
    Paragraph,
    SchemaViolation,
    TableBlock,
    TableData,
    make_document,
    normalize_whitespace,
)

W = "{http://schemas.openxmlformats.org/wordprocessingml/2006/main}"
DC_TITLE = (
    "{http://purl.org/dc/elements/1.1/}title"
)

DOCUMENT_PART = "word/document.xml"
CORE_PROPS_PART = "docProps/core.xml"

_HEADING_STYLE = re.compile(r"heading(\d+)$", re.IGNORECASE)


class IngestError(Exception):
    pass


class NotAZip(IngestError):
    pass


class MissingDocumentPart(IngestError):
    pass


class MalformedXml(IngestError):
    pass


@dataclass(frozen=True)
class RawElement:
    """A body-level element in source order, before block construction."""

    kind: str  # "paragraph" | "table"
    text: str = ""
    cells: tuple[tuple[str, ...], ...] = ()
    style_name: str | None = None

    @property
    def is_heading(self) -> bool:
        return bool(self.style_name and _HEADING_STYLE.search(self.style_name))

    @property
    def heading_level(self) -> int | None:
        if not self.style_name:
            return None
        m = _HEADING_STYLE.search(self.style_name)
        return int(m.group(1)) if m else None


def _element_text(el: ET.Element) -> str:
    """Concatenated run text; tabs and breaks become spaces."""
    parts: list[str] = []
    for node in el.iter():
        if node.tag == W + "t":
            parts.append(node.text or "")
        elif node.tag in (W + "tab", W + "br", W + "cr"):
            parts.append(" ")
    return normalize_whitespace(" ".join(parts))


def _cell_text(tc: ET.Element) -> str:
    # iter() descends into nested tables, flattening their cell text into
    # the containing cell in document order.
    return _element_text(tc)


def _expand_table(tbl: ET.Element) -> tuple[tuple[str, ...], ...]:
    """Resolve gridSpan / vMerge so every row covers the full grid width.

    Merged values are repeated into each covered position; a vertically
    merged cell takes the value of the cell above in the same grid column.
    """
    rows: list[tuple[str, ...]] = []
    prev: dict[int, str] = {}
    for tr in tbl.findall(W + "tr"):
        values: list[str] = []
        current: dict[int, str] = {}
        col = 0
        for tc in tr.findall(W + "tc"):
            tc_pr = tc.find(W + "tcPr")
            span = 1
            vmerge_continue = False
            if tc_pr is not None:
                grid_span = tc_pr.find(W + "gridSpan")
                if grid_span is not None:
                    span = max(1, int(grid_span.get(W + "val", "1")))
                vmerge = tc_pr.find(W + "vMerge")
                if vmerge is not None and vmerge.get(W + "val", "continue") == "continue":
                    vmerge_continue = True
            text = _cell_text(tc)
            if vmerge_continue:
                text = prev.get(col, text)
            for offset in range(span):
                values.append(text)
                current[col + offset] = text
            col += span
        prev = current
        rows.append(tuple(values))
    return tuple(rows)


def _body_elements(body: ET.Element):
    """Yield body-level p and tbl elements, descending into sdt wrappers."""
    for child in body:
        if child.tag == W + "p":
            yield child
        elif child.tag == W + "tbl":
            yield child
        elif child.tag == W + "sdt":
            content = child.find(W + "sdtContent")
            if content is not None:
                yield from _body_elements(content)


def _raw_elements(body: ET.Element) -> list[RawElement]:
    elements: list[RawElement] = []
    for el in _body_elements(body):
        if el.tag == W + "p":
            style = None
            p_pr = el.find(W + "pPr")
            if p_pr is not None:
                p_style = p_pr.find(W + "pStyle")
                if p_style is not None:
                    style = p_style.get(W + "val")
            elements.append(RawElement(kind="paragraph", text=_element_text(el), style_name=style))
        else:
            grid = _expand_table(el)
            elements.append(RawElement(kind="table", cells=grid))
    return elements


def detect_caption(elements: list[RawElement], table_index: int) -> str | None:
    """Caption of the table at ``table_index``, by the preceding-paragraph rule.

    Heading-styled paragraphs are section structure, never captions.
    """
    if not 0 <= table_index < len(elements):
        raise IndexError(f"table_index {table_index} out of range for {len(elements)} elements")
    if elements[table_index].kind != "table":
        raise ValueError(f"element at index {table_index} is not a table")
    if table_index == 0:
        return None
    prev = elements[table_index - 1]
    if prev.kind != "paragraph" or prev.is_heading:
        return None
    if prev.text.strip().lower().startswith("table"):
        return prev.text
    return None


def _read_title(archive: zipfile.ZipFile) -> str:
    try:
        raw = archive.read(CORE_PROPS_PART)
    except KeyError:
        return ""
    try:
        root = ET.fromstring(raw)
    except ET.ParseError:
        return ""
    node = root.find(DC_TITLE)
    return normalize_whitespace(node.text or "") if node is not None else ""


def parse_docx(archive_bytes: bytes, doc_id: str | None = None) -> Document:
    """Parse a .docx archive into a normalized Document.

    Blocks mirror body element order; captions are consumed per
    detect_caption; empty paragraphs are dropped; tables without any row
    are skipped. ``doc_id`` defaults to a content hash so identical bytes
    always produce identical output.
    """
    try:
        archive = zipfile.ZipFile(io.BytesIO(archive_bytes))
    except zipfile.BadZipFile as exc:
        raise NotAZip(f"not a docx archive: {exc}") from exc
    with archive:
        try:
            document_xml = archive.read(DOCUMENT_PART)
        except KeyError:
            raise MissingDocumentPart(f"archive has no {DOCUMENT_PART}") from None
        try:
            root = ET.fromstring(document_xml)
        except ET.ParseError as exc:
            raise MalformedXml(f"{DOCUMENT_PART}: {exc}") from exc
        title = _read_title(archive)

    body = root.find(W + "body")
    if body is None:
        raise MalformedXml(f"{DOCUMENT_PART}: missing body element")

    if doc_id is None:
        doc_id = "doc-" + hashlib.sha256(archive_bytes).hexdigest()[:12]

    elements = _raw_elements(body)
    captions: dict[int, str] = {}
    consumed: set[int] = set()
    for i, el in enumerate(elements):
        if el.kind == "table":
            caption = detect_caption(elements, i)
            if caption is not None:
                captions[i] = caption
                consumed.add(i - 1)

    blocks: list[Block] = []
    table_no = 0
    for i, el in enumerate(elements):
        if el.kind == "paragraph":
            if i in consumed:
                continue
            if el.is_heading:
                if el.text:
                    blocks.append(Heading(level=el.heading_level or 1, text=el.text))
            elif el.text:
                blocks.append(Paragraph(text=el.text))
        else:
            if not el.cells:
                continue
            table_no += 1
            header = el.cells[0]
            width = len(header)
            body_rows = tuple(
                tuple((list(row) + [""] * width)[:width]) for row in el.cells[1:]
            )
            blocks.append(
                TableBlock(
                    table=TableData(
                        table_id=f"{doc_id}/t{table_no}",
                        caption=captions.get(i),
                        header=header,
                        rows=body_rows,
                    )
                )
            )

    if not title:
        first_heading = next((b for b in blocks if isinstance(b, Heading)), None)
        title = first_heading.text if first_heading else ""

    return make_document(doc_id=doc_id, title=title, blocks=blocks)


# --- normalized document JSON --------------------------------------------

_DOC_KEYS = {"doc_id", "title", "blocks"}
_BLOCK_KEYS = {
    "heading": {"kind", "level", "text"},
    "paragraph": {"kind", "text"},
    "table": {"kind", "table_id", "caption", "header", "rows"},
}


def save_normalized(doc: Document) -> str:
    """Serialize to the normalized JSON format with deterministic key order."""
    blocks = []
    for block in doc.blocks:
        if isinstance(block, Heading):
            blocks.append({"kind": "heading", "level": block.level, "text": block.text})
        elif isinstance(block, Paragraph):
            blocks.append({"kind": "paragraph", "text": block.text})
        elif isinstance(block, TableBlock):
            t = block.table
            blocks.append(
                {
                    "kind": "table",
                    "table_id": t.table_id,
                    "caption": t.caption,
                    "header": list(t.header),
                    "rows": [list(r) for r in t.rows],
                }
            )
    return json.dumps(
        {"doc_id": doc.doc_id, "title": doc.title, "blocks": blocks},
        ensure_ascii=False,
        indent=2,
    )


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise SchemaViolation(path, message)


def _check_str_list(value, path: str) -> None:
    _require(isinstance(value, list), path, "expected a list")
    for i, item in enumerate(value):
        _require(isinstance(item, str), f"{path}[{i}]", "expected a string")


def load_normalized(json_text: str) -> Document:
    """Parse the normalized JSON format; unknown keys are rejected.

    Table section paths are re-derived from block order (they are not
    part of the format), so load(save(doc)) == doc for documents built
    through this package.
    """
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"invalid JSON: {exc}") from exc
    _require(isinstance(obj, dict), "$", "expected an object")
    unknown = set(obj) - _DOC_KEYS
    _require(not unknown, "$", f"unknown keys: {sorted(unknown)}")
    _require(set(obj) == _DOC_KEYS, "$", f"required keys: {sorted(_DOC_KEYS)}")
    _require(isinstance(obj["doc_id"], str) and obj["doc_id"] != "", "$.doc_id",
             "expected a non-empty string")
    _require(isinstance(obj["title"], str), "$.title", "expected a string")
    _require(isinstance(obj["blocks"], list), "$.blocks", "expected a list")

    blocks: list[Block] = []
    for i, raw in enumerate(obj["blocks"]):
        path = f"$.blocks[{i}]"
        _require(isinstance(raw, dict), path, "expected an object")
        kind = raw.get("kind")
        _require(
            kind in _BLOCK_KEYS,
            f"{path}.kind",
            f"unknown block kind {kind!r}",
        )
        allowed = _BLOCK_KEYS[kind]
        unknown = set(raw) - allowed
        _require(not unknown, path, f"unknown keys: {sorted(unknown)}")
        _require(set(raw) == allowed, path, f"required keys: {sorted(allowed)}")
        if kind == "heading":
            _require(isinstance(raw["level"], int) and not isinstance(raw["level"], bool),
                     f"{path}.level", "expected an integer")
            _require(isinstance(raw["text"], str), f"{path}.text", "expected a string")
            blocks.append(Heading(level=raw["level"], text=raw["text"]))
        elif kind == "paragraph":
            _require(isinstance(raw["text"], str), f"{path}.text", "expected a string")
            blocks.append(Paragraph(text=raw["text"]))
        else:
            _require(isinstance(raw["table_id"], str) and raw["table_id"] != "",
                     f"{path}.table_id", "expected a non-empty string")
            caption = raw["caption"]
            _require(caption is None or isinstance(caption, str),
                     f"{path}.caption", "expected a string or null")
            _check_str_list(raw["header"], f"{path}.header")
            _require(isinstance(raw["rows"], list), f"{path}.rows", "expected a list")
            for r, row in enumerate(raw["rows"]):
                _check_str_list(row, f"{path}.rows[{r}]")
            blocks.append(
                TableBlock(
                    table=TableData(
                        table_id=raw["table_id"],
                        caption=caption,
                        header=tuple(raw["header"]),
                        rows=tuple(tuple(r) for r in raw["rows"]),
                    )
                )
            )
    return make_document(doc_id=obj["doc_id"], title=obj["title"], blocks=blocks)
