#!/usr/bin/env python3
"""Write a small synthetic .docx corpus for trying out the pipeline.

The documents imitate the shape of telecom requirement specs: numbered
headings, prose clauses, and KPI tables with "Table N: ..." captions.
Content is random but deterministic per seed.
"""
from __future__ import annotations

import argparse
import io
import random
import zipfile
from pathlib import Path
from xml.sax.saxutils import escape

W_NS = "http://schemas.openxmlformats.org/wordprocessingml/2006/main"

CONTENT_TYPES = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
<Default Extension="xml" ContentType="application/xml"/>
<Override PartName="/word/document.xml" ContentType="application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml"/>
<Override PartName="/docProps/core.xml" ContentType="application/vnd.openxmlformats-package.core-properties+xml"/>
</Types>
"""

PACKAGE_RELS = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="word/document.xml"/>
</Relationships>
"""

KPIS = [
    ("End-to-end latency", "ms"),
    ("User-plane throughput", "Mbps"),
    ("Jitter", "ms"),
    ("Coverage probability", "%"),
    ("Packet loss ratio", "%"),
    ("Connection density", "devices/km2"),
]
SCENARIOS = ["Urban macro", "Rural wide-area", "Indoor hotspot", "Highway", "Dense urban"]
CLAUSES = [
    "The requirements in this clause apply to the reference deployment.",
    "Targets are stated for the busy hour and assume ideal backhaul.",
    "Values marked informative are not subject to conformance testing.",
    "Operators may relax individual targets by bilateral agreement.",
]


def para(text: str, style: str | None = None) -> str:
    ppr = f'<w:pPr><w:pStyle w:val="{escape(style)}"/></w:pPr>' if style else ""
    return (f"<w:p>{ppr}<w:r><w:t xml:space=\"preserve\">{escape(text)}</w:t></w:r></w:p>"
            if text else f"<w:p>{ppr}</w:p>")


def table(rows: list[list[str]]) -> str:
    out = []
    for row in rows:
        cells = "".join(
            f"<w:tc><w:p><w:r><w:t xml:space=\"preserve\">{escape(cell)}</w:t></w:r></w:p></w:tc>"
            for cell in row
        )
        out.append(f"<w:tr>{cells}</w:tr>")
    return f"<w:tbl>{''.join(out)}</w:tbl>"


def build_docx(body_items: list[str], title: str) -> bytes:
    document = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        f'<w:document xmlns:w="{W_NS}"><w:body>{"".join(body_items)}</w:body></w:document>'
    )
    core = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<cp:coreProperties'
        ' xmlns:cp="http://schemas.openxmlformats.org/package/2006/metadata/core-properties"'
        ' xmlns:dc="http://purl.org/dc/elements/1.1/">'
        f"<dc:title>{escape(title)}</dc:title></cp:coreProperties>"
    )
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("[Content_Types].xml", CONTENT_TYPES)
        zf.writestr("_rels/.rels", PACKAGE_RELS)
        zf.writestr("word/document.xml", document)
        zf.writestr("docProps/core.xml", core)
    return buffer.getvalue()


def make_document(rng: random.Random, number: int) -> bytes:
    title = f"TS 90.{number:03d} Service requirements"
    body = [
        para(f"Performance requirements", style="Heading1"),
        para(rng.choice(CLAUSES)),
    ]
    for t in range(1, rng.randint(2, 4)):
        kpis = rng.sample(KPIS, rng.randint(2, 4))
        rows = [["Scenario", "KPI", "Target"]]
        for kpi, unit in kpis:
            rows.append([rng.choice(SCENARIOS), kpi, f"{rng.randint(1, 500)} {unit}"])
        body.append(para(f"Scenario group {t}", style="Heading2"))
        if rng.random() < 0.75:
            body.append(para(f"Table {t}: KPI targets for scenario group {t}"))
        body.append(table(rows))
        body.append(para(rng.choice(CLAUSES)))
    return build_docx(body, title)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", help="directory for the generated .docx files")
    parser.add_argument("--docs", type=int, default=4)
    parser.add_argument("--seed", type=int, default=90)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(1, args.docs + 1):
        path = out_dir / f"ts90{i:03d}.docx"
        path.write_bytes(make_document(rng, i))
        print(f"wrote {path}")
    print(f"{args.docs} documents in {out_dir}; next: tabrag ingest {out_dir} --out-dir CORPUS")


if __name__ == "__main__":
    main()
