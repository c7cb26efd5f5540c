from __future__ import annotations

import json

import pytest

import docxkit as dk
from tabrag.docmodel import Heading, Paragraph, SchemaViolation, TableBlock, make_document, make_table
from tabrag.ingest import (
    MalformedXml,
    MissingDocumentPart,
    NotAZip,
    RawElement,
    detect_caption,
    load_normalized,
    parse_docx,
    save_normalized,
)


# --- parse_docx ---------------------------------------------------------------

def test_simple_paragraph_and_table():
    data = dk.build_docx(
        dk.para("Hello."),
        dk.table([["Use case", "Latency"], ["UK Home", "10 ms"]]),
    )
    doc = parse_docx(data, doc_id="d")
    assert [type(b) for b in doc.blocks] == [Paragraph, TableBlock]
    assert doc.blocks[0].text == "Hello."
    table = doc.blocks[1].table
    assert table.table_id == "d/t1"
    assert table.header == ("Use case", "Latency")
    assert table.rows == (("UK Home", "10 ms"),)
    assert table.caption is None


def test_caption_paragraph_consumed():
    data = dk.build_docx(
        dk.para("Table 5.1-1: Latency KPIs"),
        dk.table([["KPI", "Value"], ["Latency", "10 ms"]]),
        dk.para("After."),
    )
    doc = parse_docx(data, doc_id="d")
    assert [type(b) for b in doc.blocks] == [TableBlock, Paragraph]
    assert doc.blocks[0].table.caption == "Table 5.1-1: Latency KPIs"
    assert all(
        b.text != "Table 5.1-1: Latency KPIs"
        for b in doc.blocks
        if isinstance(b, Paragraph)
    )


def test_caption_requires_table_prefix():
    data = dk.build_docx(
        dk.para("The KPIs are:"),
        dk.table([["KPI"], ["Latency"]]),
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[1].table.caption is None
    assert doc.blocks[0].text == "The KPIs are:"


def test_caption_prefix_is_case_insensitive():
    data = dk.build_docx(
        dk.para("TABLE 2 — thresholds"),
        dk.table([["A"], ["x"]]),
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[0].table.caption == "TABLE 2 — thresholds"


def test_heading_styled_paragraph_is_never_a_caption():
    data = dk.build_docx(
        dk.para("Table formats", style="Heading2"),
        dk.table([["A"], ["x"]]),
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[0] == Heading(2, "Table formats")
    assert doc.blocks[1].table.caption is None


def test_heading_levels_and_fallthrough():
    data = dk.build_docx(
        dk.para("Intro", style="Heading1"),
        dk.para("Depths", style="heading3"),  # style matching is case-insensitive
        dk.para("Styled but not a heading", style="Quote"),
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks == (
        Heading(1, "Intro"),
        Heading(3, "Depths"),
        Paragraph("Styled but not a heading"),
    )


def test_section_paths_derived_from_headings():
    data = dk.build_docx(
        dk.para("Intro", style="Heading1"),
        dk.para("KPIs", style="Heading2"),
        dk.table([["A"], ["x"]]),
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[-1].table.section_path == ("Intro", "KPIs")


def test_empty_paragraphs_dropped_and_rowless_tables_skipped():
    data = dk.build_docx(
        dk.para(""),
        dk.para("   "),
        "<w:tbl></w:tbl>",
        dk.para("Kept."),
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks == (Paragraph("Kept."),)


def test_grid_span_expands_merged_cells():
    data = dk.build_docx(
        dk.table([
            [dk.cell("Spanned", grid_span=2), dk.cell("C")],
            [dk.cell("a"), dk.cell("b"), dk.cell("c")],
        ])
    )
    doc = parse_docx(data, doc_id="d")
    table = doc.blocks[0].table
    assert table.header == ("Spanned", "Spanned", "C")
    assert table.rows == (("a", "b", "c"),)


def test_vmerge_repeats_value_down_the_column():
    data = dk.build_docx(
        dk.table([
            [dk.cell("H1"), dk.cell("H2")],
            [dk.cell("group", vmerge="restart"), dk.cell("r1")],
            [dk.cell("", vmerge="continue"), dk.cell("r2")],
        ])
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[0].table.rows == (("group", "r1"), ("group", "r2"))


def test_nested_table_flattened_into_cell():
    data = dk.build_docx(
        dk.table([
            [dk.cell("H1"), dk.cell("H2")],
            [dk.cell("outer", nested_rows=[["in1", "in2"]]), dk.cell("plain")],
        ])
    )
    doc = parse_docx(data, doc_id="d")
    # exactly one table block: the nested table is not emitted separately
    tables = [b for b in doc.blocks if isinstance(b, TableBlock)]
    assert len(tables) == 1
    row = tables[0].table.rows[0]
    assert row[1] == "plain"
    assert "in1" in row[0] and "in2" in row[0] and "outer" in row[0]


def test_sdt_content_unwrapped_in_order():
    data = dk.build_docx(
        dk.para("Before."),
        dk.sdt(dk.para("Inside."), dk.table([["A"], ["x"]])),
        dk.para("After."),
    )
    doc = parse_docx(data, doc_id="d")
    kinds = [type(b).__name__ for b in doc.blocks]
    assert kinds == ["Paragraph", "Paragraph", "TableBlock", "Paragraph"]
    assert doc.blocks[1].text == "Inside."


def test_tabs_and_breaks_become_spaces():
    data = dk.build_docx(dk.para_with_tab("left", "right"))
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[0].text == "left right"


def test_multi_run_paragraph_concatenated():
    data = dk.build_docx(dk.para("", runs=["Latency ", "is ", "low."]))
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[0].text == "Latency is low."


def test_ragged_body_rows_padded_and_trimmed_to_header_width():
    data = dk.build_docx(
        dk.table([
            ["A", "B"],
            ["only"],
            ["x", "y", "extra"],
        ])
    )
    doc = parse_docx(data, doc_id="d")
    assert doc.blocks[0].table.rows == (("only", ""), ("x", "y"))


def test_title_from_core_properties():
    data = dk.build_docx(dk.para("Body."), title="TS 23.501 excerpt")
    assert parse_docx(data, doc_id="d").title == "TS 23.501 excerpt"


def test_title_falls_back_to_first_heading():
    data = dk.build_docx(dk.para("Overview", style="Heading1"), dk.para("Body."))
    assert parse_docx(data, doc_id="d").title == "Overview"


def test_default_doc_id_is_content_hash():
    data = dk.build_docx(dk.para("Body."))
    doc = parse_docx(data)
    assert doc.doc_id.startswith("doc-") and len(doc.doc_id) == 16
    assert parse_docx(data).doc_id == doc.doc_id


def test_table_ids_number_in_document_order():
    data = dk.build_docx(
        dk.table([["A"], ["1"]]),
        dk.para("Between."),
        dk.table([["B"], ["2"]]),
    )
    doc = parse_docx(data, doc_id="d")
    ids = [b.table.table_id for b in doc.blocks if isinstance(b, TableBlock)]
    assert ids == ["d/t1", "d/t2"]


def test_parse_is_deterministic():
    data = dk.build_docx(
        dk.para("Table 1: caption"),
        dk.table([["A", "B"], ["1", "2"]]),
        dk.para("Tail."),
        title="Doc",
    )
    assert save_normalized(parse_docx(data, "d")) == save_normalized(parse_docx(data, "d"))


def test_not_a_zip():
    with pytest.raises(NotAZip):
        parse_docx(b"this is not a zip archive")


def test_missing_document_part():
    data = dk.build_docx(dk.para("x"))
    import io
    import zipfile

    src = zipfile.ZipFile(io.BytesIO(data))
    out = io.BytesIO()
    with zipfile.ZipFile(out, "w") as zf:
        for name in src.namelist():
            if name != "word/document.xml":
                zf.writestr(name, src.read(name))
    with pytest.raises(MissingDocumentPart, match="word/document.xml"):
        parse_docx(out.getvalue())


def test_malformed_xml():
    data = dk.build_docx(document_part="<w:document><unclosed")
    with pytest.raises(MalformedXml, match="word/document.xml"):
        parse_docx(data)


# --- detect_caption -------------------------------------------------------------

def _elements():
    return [
        RawElement(kind="paragraph", text="Table 1: KPIs"),
        RawElement(kind="table", cells=(("A",),)),
        RawElement(kind="paragraph", text="Plain text"),
        RawElement(kind="table", cells=(("B",),)),
    ]


def test_detect_caption_basic():
    assert detect_caption(_elements(), 1) == "Table 1: KPIs"
    assert detect_caption(_elements(), 3) is None


def test_detect_caption_at_index_zero():
    elements = [RawElement(kind="table", cells=(("A",),))]
    assert detect_caption(elements, 0) is None


def test_detect_caption_argument_errors():
    with pytest.raises(IndexError):
        detect_caption(_elements(), 9)
    with pytest.raises(ValueError):
        detect_caption(_elements(), 0)  # a paragraph, not a table


# --- normalized JSON ------------------------------------------------------------

def _fixture_doc():
    return make_document(
        "d1",
        "Title",
        [
            Heading(1, "Intro"),
            Paragraph("Some text."),
            TableBlock(
                make_table("d1/t1", ["A", "B"], [["1", "2"]], caption="Table 1: x")
            ),
            TableBlock(make_table("d1/t2", ["C"], [], caption=None)),
        ],
    )


def test_save_load_round_trip():
    doc = _fixture_doc()
    assert load_normalized(save_normalized(doc)) == doc


def test_save_emits_documented_key_order():
    doc = _fixture_doc()
    obj = json.loads(save_normalized(doc))
    assert list(obj) == ["doc_id", "title", "blocks"]
    assert list(obj["blocks"][0]) == ["kind", "level", "text"]
    assert list(obj["blocks"][1]) == ["kind", "text"]
    assert list(obj["blocks"][2]) == ["kind", "table_id", "caption", "header", "rows"]


def test_load_accepts_null_caption():
    doc = load_normalized(save_normalized(_fixture_doc()))
    assert doc.blocks[3].table.caption is None


def test_load_rejects_unknown_block_kind():
    text = json.dumps(
        {"doc_id": "d", "title": "", "blocks": [{"kind": "image", "text": "x"}]}
    )
    with pytest.raises(SchemaViolation) as exc_info:
        load_normalized(text)
    assert exc_info.value.path == "$.blocks[0].kind"


def test_load_rejects_unknown_keys():
    text = json.dumps(
        {"doc_id": "d", "title": "", "blocks": [{"kind": "paragraph", "text": "x", "style": "q"}]}
    )
    with pytest.raises(SchemaViolation, match="unknown keys"):
        load_normalized(text)
    with pytest.raises(SchemaViolation, match="unknown keys"):
        load_normalized('{"doc_id": "d", "title": "", "blocks": [], "extra": 1}')


def test_load_rejects_missing_keys_and_bad_types():
    with pytest.raises(SchemaViolation):
        load_normalized('{"doc_id": "d", "blocks": []}')
    with pytest.raises(SchemaViolation, match=r"\$\.doc_id"):
        load_normalized('{"doc_id": "", "title": "", "blocks": []}')
    bad_level = {"doc_id": "d", "title": "", "blocks": [{"kind": "heading", "level": True, "text": "x"}]}
    with pytest.raises(SchemaViolation, match=r"\$\.blocks\[0\]\.level"):
        load_normalized(json.dumps(bad_level))
    bad_rows = {"doc_id": "d", "title": "", "blocks": [
        {"kind": "table", "table_id": "t", "caption": None, "header": ["A"], "rows": [["1"], [2]]}
    ]}
    with pytest.raises(SchemaViolation, match=r"rows\[1\]\[0\]"):
        load_normalized(json.dumps(bad_rows))
    with pytest.raises(SchemaViolation, match="invalid JSON"):
        load_normalized("{nope")


def test_load_rederives_section_paths():
    text = json.dumps({
        "doc_id": "d", "title": "", "blocks": [
            {"kind": "heading", "level": 1, "text": "Ch"},
            {"kind": "table", "table_id": "d/t1", "caption": None,
             "header": ["A"], "rows": []},
        ],
    })
    doc = load_normalized(text)
    assert doc.blocks[1].table.section_path == ("Ch",)


def test_parse_then_save_then_load_identity():
    data = dk.build_docx(
        dk.para("Intro", style="Heading1"),
        dk.para("Table 1: KPI list"),
        dk.table([["KPI", "Value"], ["Latency", "10 ms"]]),
        dk.para("Tail paragraph."),
        title="Sample",
    )
    doc = parse_docx(data, doc_id="sample")
    assert load_normalized(save_normalized(doc)) == doc
