"""QA evaluation: the correct-table hit rule, top-k accuracy, and the
16-configuration grid runner with CSV / grouped-bar report emission.

A retrieval counts as correct when any chunk of the right table (a row,
the whole table, the header, or the caption) appears among the k chunks
with the highest cosine similarity to the question.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .chunking import (
    Chunk,
    ChunkKind,
    ChunkLevel,
    ReprConfig,
    Separator,
    all_configs,
    build_corpus,
)
from .docmodel import Document, SchemaViolation, TableBlock
from .embedding import EmbeddingCache, ProviderDescriptor, embed_batch, embeddable
from .vecindex import SearchHit, VectorIndex

QTYPES = ("E", "M", "A", "I")

# Chunk kinds that establish a correct-table association when retrieved.
TABLE_KINDS = frozenset({ChunkKind.ROW, ChunkKind.TABLE, ChunkKind.HEADER, ChunkKind.CAPTION})


class EvalError(Exception):
    pass


class DuplicateQid(EvalError):
    pass


class UnknownChunkId(EvalError):
    pass


class GoldTableMissing(EvalError):
    def __init__(self, qid: str, table_id: str):
        super().__init__(f"question {qid!r} references unknown table {table_id!r}")
        self.qid = qid
        self.table_id = table_id


@dataclass(frozen=True)
class QAItem:
    qid: str
    question: str
    gold_table_ids: tuple[str, ...]
    qtype: str


@dataclass(frozen=True)
class QuestionResult:
    qid: str
    hit: bool
    first_rank: int | None


@dataclass(frozen=True)
class RunReport:
    provider: ProviderDescriptor
    k: int
    config: ReprConfig | None = None
    overall_accuracy: float | None = None
    per_type_accuracy: dict[str, float] = field(default_factory=dict)
    per_question: tuple[QuestionResult, ...] = ()
    failed: str | None = None


def load_qa(jsonl_text: str) -> list[QAItem]:
    """Parse the QA JSONL file: qid, question, gold_table_ids, qtype per line.

    Unknown extra keys are tolerated (the dataset schema travels with its
    curators); missing or ill-typed required fields are not.
    """
    items: list[QAItem] = []
    seen: set[str] = set()
    for line_no, line in enumerate(jsonl_text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"line {line_no}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(where, f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise SchemaViolation(where, "record is not a JSON object")
        qid = obj.get("qid")
        question = obj.get("question")
        gold = obj.get("gold_table_ids")
        qtype = obj.get("qtype")
        if not isinstance(qid, str) or not qid:
            raise SchemaViolation(where, "qid must be a non-empty string")
        if not isinstance(question, str) or not question:
            raise SchemaViolation(where, "question must be a non-empty string")
        if (
            not isinstance(gold, list)
            or not gold
            or not all(isinstance(g, str) and g for g in gold)
        ):
            raise SchemaViolation(where, "gold_table_ids must be a non-empty list of strings")
        if qtype not in QTYPES:
            raise SchemaViolation(where, f"qtype must be one of {'/'.join(QTYPES)}, got {qtype!r}")
        if qid in seen:
            raise DuplicateQid(f"duplicate qid {qid!r} at {where}")
        seen.add(qid)
        items.append(QAItem(qid=qid, question=question, gold_table_ids=tuple(gold), qtype=qtype))
    return items


def judge_hit(
    hits: list[SearchHit],
    provenance_map: dict,
    gold_table_ids: tuple[str, ...] | list[str],
) -> tuple[bool, int | None]:
    """Apply the hit rule to one result list.

    True iff some retrieved chunk is a row/table/header/caption chunk of a
    gold table; the rank returned is the first such position.
    """
    gold = set(gold_table_ids)
    for hit in hits:
        prov = provenance_map.get(hit.chunk_id)
        if prov is None:
            raise UnknownChunkId(f"hit references unknown chunk {hit.chunk_id!r}")
        if prov.kind in TABLE_KINDS and prov.table_id in gold:
            return True, hit.rank
    return False, None


def build_index_from_chunks(
    chunks: list[Chunk],
    provider: ProviderDescriptor,
    cache: EmbeddingCache | None = None,
    retry_wait: float = 0.5,
) -> tuple[VectorIndex, int]:
    """Embed chunks and build the index; returns (index, skipped_count).

    Chunks with no alphanumeric content (fully empty rows exist in real
    corpora) cannot be embedded or retrieved and are skipped, counted.
    """
    usable = embeddable(chunks)
    skipped = len(chunks) - len(usable)
    index = VectorIndex(provider.dim)
    vectors = embed_batch([c.text for c in usable], provider, cache, retry_wait)
    for chunk, vector in zip(usable, vectors):
        index.add(chunk.chunk_id, vector, chunk.provenance)
    return index, skipped


def _accuracy(results: list[QuestionResult]) -> float:
    return 100.0 * sum(1 for r in results if r.hit) / len(results)


def evaluate_run(
    qa: list[QAItem],
    index: VectorIndex,
    provider: ProviderDescriptor,
    k: int,
    config: ReprConfig | None = None,
    cache: EmbeddingCache | None = None,
    retry_wait: float = 0.5,
) -> RunReport:
    """Embed every question, retrieve top-k, judge hits, aggregate accuracy.

    The index is read-only here, so questions may be evaluated from
    multiple threads; this implementation batches the question embeddings
    and scans sequentially, which is equivalent and deterministic.
    """
    known_tables = {p.table_id for p in index.provenance_map.values() if p.table_id}
    for item in qa:
        for tid in item.gold_table_ids:
            if tid not in known_tables:
                raise GoldTableMissing(item.qid, tid)

    vectors = embed_batch([item.question for item in qa], provider, cache, retry_wait)
    per_question: list[QuestionResult] = []
    for item, qv in zip(qa, vectors):
        hits = index.topk(qv, k)
        hit, first_rank = judge_hit(hits, index.provenance_map, item.gold_table_ids)
        per_question.append(QuestionResult(qid=item.qid, hit=hit, first_rank=first_rank))

    by_type: dict[str, list[QuestionResult]] = {}
    for item, result in zip(qa, per_question):
        by_type.setdefault(item.qtype, []).append(result)
    per_type = {qtype: _accuracy(results) for qtype, results in sorted(by_type.items())}

    return RunReport(
        provider=provider,
        k=k,
        config=config,
        overall_accuracy=_accuracy(per_question) if per_question else 0.0,
        per_type_accuracy=per_type,
        per_question=tuple(per_question),
    )


def run_grid(
    docs: list[Document],
    qa: list[QAItem],
    providers: list[ProviderDescriptor],
    k: int,
    configs: tuple[ReprConfig, ...] | None = None,
    cache: EmbeddingCache | None = None,
    parallel: int = 1,
    retry_wait: float = 0.5,
) -> list[RunReport]:
    """Evaluate every (config, provider) cell; config-major order.

    A failing cell is recorded in its report instead of aborting the grid;
    corpora are built once per config and the shared cache keeps repeated
    sentence embeddings from being recomputed per config.
    """
    if not providers:
        raise ValueError("at least one provider is required")
    configs = all_configs() if configs is None else configs
    if cache is None:
        cache = EmbeddingCache()

    corpus_table_ids = {
        b.table.table_id for d in docs for b in d.blocks if isinstance(b, TableBlock)
    }
    for item in qa:
        for tid in item.gold_table_ids:
            if tid not in corpus_table_ids:
                raise GoldTableMissing(item.qid, tid)

    corpora = [(cfg, build_corpus(docs, cfg)) for cfg in configs]
    cells = [(cfg, chunks, provider) for cfg, chunks in corpora for provider in providers]

    def run_cell(cell) -> RunReport:
        cfg, chunks, provider = cell
        try:
            index, _ = build_index_from_chunks(chunks, provider, cache, retry_wait)
            return evaluate_run(qa, index, provider, k, cfg, cache, retry_wait)
        except Exception as exc:  # error isolation: record, keep going
            return RunReport(provider=provider, k=k, config=cfg, failed=str(exc))

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(run_cell, cells))
    return [run_cell(cell) for cell in cells]


# --- report emission ------------------------------------------------------

CSV_COLUMNS = [
    "provider", "chunk_level", "separator", "repeat_header", "include_text",
    "k", "overall", "acc_E", "acc_M", "acc_A", "acc_I", "failed",
]


def _yesno(flag: bool) -> str:
    return "yes" if flag else "no"


def emit_csv(reports: list[RunReport]) -> str:
    """One row per report; accuracies to one decimal, absent buckets empty."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        cfg = r.config
        row = [
            r.provider.name,
            cfg.chunk_level.value if cfg else "",
            cfg.separator.value if cfg else "",
            _yesno(cfg.repeat_header) if cfg else "",
            _yesno(cfg.include_text) if cfg else "",
            str(r.k),
            "" if r.overall_accuracy is None else f"{r.overall_accuracy:.1f}",
        ]
        for qtype in QTYPES:
            acc = r.per_type_accuracy.get(qtype)
            row.append("" if acc is None else f"{acc:.1f}")
        row.append(r.failed or "")
        writer.writerow(row)
    return out.getvalue()


def emit_bar_data(reports: list[RunReport]) -> str:
    """Grouped-bar JSON: one panel per (chunk_level, separator), four
    (repeat_header, include_text) groups per panel, one bar per provider."""
    panels = []
    for cl in ChunkLevel:
        for sep in Separator:
            groups = []
            for rh in (False, True):
                for it in (False, True):
                    bars = [
                        {
                            "provider": r.provider.name,
                            "accuracy": r.overall_accuracy,
                        }
                        for r in reports
                        if r.config
                        and r.config.chunk_level is cl
                        and r.config.separator is sep
                        and r.config.repeat_header == rh
                        and r.config.include_text == it
                    ]
                    if bars:
                        groups.append(
                            {"repeat_header": rh, "include_text": it, "bars": bars}
                        )
            if groups:
                panels.append(
                    {"chunk_level": cl.value, "separator": sep.value, "groups": groups}
                )
    return json.dumps({"panels": panels}, indent=2)


def emit_report(reports: list[RunReport], format: str) -> str:
    if not reports:
        raise ValueError("no reports to emit")
    if format == "csv":
        return emit_csv(reports)
    if format == "grouped-bar-data":
        return emit_bar_data(reports)
    raise ValueError(f"unknown report format {format!r}")


def best_cell(reports: list[RunReport]) -> RunReport | None:
    """The highest-accuracy non-failed report, ties to the earliest."""
    ok = [r for r in reports if r.failed is None and r.overall_accuracy is not None]
    if not ok:
        return None
    return max(ok, key=lambda r: r.overall_accuracy)  # max keeps first on ties
