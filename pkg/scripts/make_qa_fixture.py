#!/usr/bin/env python3
"""Regenerate tests/data/qa_fixture.jsonl (deterministic, seed 2024).

The fixture mirrors the reference dataset's per-type question counts
(E=50, A=77, M=51, I=50 — 228 items) over 62 distinct synthetic gold
tables. Content is synthetic; only the shape is meaningful.
"""
from __future__ import annotations

import json
import random
from pathlib import Path

TYPE_COUNTS = {"E": 50, "A": 77, "M": 51, "I": 50}
N_TABLES = 62

TOPICS = (
    "latency", "throughput", "handover", "paging", "scheduling", "coverage",
    "uplink power", "bearer setup", "timer expiry", "retransmission",
    "measurement gap", "carrier aggregation", "beam selection", "cell reselection",
)

TEMPLATES = {
    "E": "What is the {topic} value specified for configuration {n}?",
    "M": "Which rows share the same {topic} bound as configuration {n}?",
    "A": "How many configurations exceed the {topic} threshold of {n}?",
    "I": "Does any configuration permit {topic} relaxation below level {n}?",
}


def main() -> None:
    rng = random.Random(2024)
    table_ids = []
    doc_num, table_num = 1, 0
    while len(table_ids) < N_TABLES:
        table_num += 1
        table_ids.append(f"d{doc_num:02d}/t{table_num}")
        if table_num >= rng.randint(2, 4):
            doc_num, table_num = doc_num + 1, 0

    qtypes = [t for t, n in TYPE_COUNTS.items() for _ in range(n)]
    rng.shuffle(qtypes)

    lines = []
    for i, qtype in enumerate(qtypes, start=1):
        table_id = table_ids[(i - 1) % N_TABLES] if i <= N_TABLES else rng.choice(table_ids)
        question = TEMPLATES[qtype].format(topic=rng.choice(TOPICS), n=rng.randint(1, 30))
        lines.append(json.dumps({
            "qid": f"q{i:03d}",
            "question": question,
            "gold_table_ids": [table_id],
            "qtype": qtype,
        }))

    out = Path(__file__).resolve().parent.parent / "tests" / "data" / "qa_fixture.jsonl"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    golds = {json.loads(line)["gold_table_ids"][0] for line in lines}
    print(f"wrote {out}: {len(lines)} items over {len(golds)} gold tables")


if __name__ == "__main__":
    main()
