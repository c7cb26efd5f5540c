"""Command-line surface for the retrieval benchmark pipeline.

Commands: ingest, stats, chunk, embed, index, query, evaluate, grid.
Outputs are files; stdout carries human summaries. Exit codes: 0 success,
1 partial or data failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .chunking import (
    ChunkLevel,
    ReprConfig,
    Separator,
    all_configs,
    build_corpus,
    chunks_from_jsonl,
    chunks_to_jsonl,
    split_sentences,
)
from .docmodel import Paragraph, SchemaViolation, TableBlock, corpus_stats, validate_corpus
from .embedding import (
    EmbeddingCache,
    EmbeddingError,
    ProviderDescriptor,
    embed_batch,
    embeddable,
    local_hash_provider,
    remote_provider,
)
from .evaluation import (
    EvalError,
    best_cell,
    build_index_from_chunks,
    emit_bar_data,
    emit_csv,
    evaluate_run,
    load_qa,
    run_grid,
)
from .ingest import IngestError, load_normalized, parse_docx, save_normalized
from .vecindex import IndexError_, VectorIndex

EMBED_URL_ENV = "TABRAG_EMBED_URL"
STATS_BASENAME = "corpus_stats.json"  # sidecar written by `stats`, not a document


class CliError(Exception):
    """Data or runtime failure; maps to exit code 1."""


# --- helpers ---------------------------------------------------------------

def _load_corpus(corpus_dir: Path):
    paths = sorted(p for p in corpus_dir.glob("*.json") if p.name != STATS_BASENAME)
    docs = []
    for path in paths:
        try:
            docs.append(load_normalized(path.read_text(encoding="utf-8")))
        except (IngestError, SchemaViolation) as exc:
            raise CliError(f"{path}: {exc}") from exc
    if not docs:
        raise CliError(f"empty corpus: no normalized *.json under {corpus_dir}")
    violations = validate_corpus(docs)
    if violations:
        detail = "; ".join(v.message for v in violations[:5])
        raise CliError(f"corpus failed validation ({len(violations)} violations): {detail}")
    return docs


def _resolve_providers(specs: list[str], embed_url: str | None) -> list[ProviderDescriptor]:
    providers = []
    for spec in specs:
        if spec == "local-hash":
            providers.append(local_hash_provider())
        elif spec.startswith("local-hash:"):
            providers.append(local_hash_provider(int(spec.split(":", 1)[1])))
        else:
            if not embed_url:
                raise CliError(
                    f"provider {spec!r} is remote; pass --embed-url or set ${EMBED_URL_ENV}"
                )
            providers.append(remote_provider(spec, embed_url))
    return providers


_CONFIG_TOKENS = {
    "table": lambda c: c.chunk_level is ChunkLevel.TABLE,
    "row": lambda c: c.chunk_level is ChunkLevel.ROW,
    "pipe": lambda c: c.separator is Separator.PIPE,
    "space": lambda c: c.separator is Separator.SPACE,
    "repeat": lambda c: c.repeat_header,
    "norepeat": lambda c: not c.repeat_header,
    "text": lambda c: c.include_text,
    "notext": lambda c: not c.include_text,
}


def _filter_configs(selector: str | None) -> tuple[ReprConfig, ...]:
    configs = all_configs()
    if not selector:
        return configs
    for token in selector.split(","):
        token = token.strip().lower()
        if token not in _CONFIG_TOKENS:
            raise CliError(
                f"unknown --configs token {token!r}; valid: {', '.join(sorted(_CONFIG_TOKENS))}"
            )
        configs = tuple(c for c in configs if _CONFIG_TOKENS[token](c))
    if not configs:
        raise CliError("--configs selector matched no grid cells")
    return configs


def _repr_config(args) -> ReprConfig:
    return ReprConfig(
        chunk_level=ChunkLevel(args.chunk_level),
        separator=Separator(args.separator),
        repeat_header=args.repeat_header,
        include_text=args.include_text,
    )


def _load_cache(path: str | None) -> EmbeddingCache:
    if path and Path(path).exists():
        return EmbeddingCache.load(path)
    return EmbeddingCache()


@contextmanager
def _output_lock(out_dir: Path):
    # one writer per output directory; prevents report clobbering
    lock_path = out_dir / ".tabrag.lock"
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise CliError(f"output directory locked by another run: {lock_path}") from None
    try:
        yield
    finally:
        os.close(fd)
        lock_path.unlink(missing_ok=True)


# --- commands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs: list[Path] = []
    for raw in args.inputs:
        path = Path(raw)
        if path.is_dir():
            inputs.extend(sorted(path.rglob("*.docx")))
        else:
            inputs.append(path)
    if not inputs:
        raise CliError("no input files found")

    failures = 0
    total_tables = 0
    total_captions = 0
    for path in inputs:
        try:
            if path.suffix.lower() == ".json":
                doc = load_normalized(path.read_text(encoding="utf-8"))
            else:
                doc = parse_docx(path.read_bytes(), doc_id=path.stem)
        except (IngestError, SchemaViolation, OSError) as exc:
            failures += 1
            print(f"FAIL {path}: {exc}", file=sys.stderr)
            if not args.keep_going:
                break
            continue
        tables = [b.table for b in doc.blocks if isinstance(b, TableBlock)]
        paragraphs = sum(1 for b in doc.blocks if isinstance(b, Paragraph))
        captions = sum(1 for t in tables if t.caption is not None)
        total_tables += len(tables)
        total_captions += captions
        out_path = out_dir / f"{doc.doc_id}.json"
        out_path.write_text(save_normalized(doc), encoding="utf-8")
        print(f"ok   {path} -> {out_path}: {len(tables)} tables, "
              f"{paragraphs} paragraphs, {captions} captions")

    rate = 100.0 * total_captions / total_tables if total_tables else 0.0
    print(f"ingested {len(inputs) - failures}/{len(inputs)} files, "
          f"{total_tables} tables, caption hit-rate {rate:.1f}%")
    return 1 if failures else 0


def cmd_stats(args) -> int:
    docs = _load_corpus(Path(args.corpus_dir))
    stats = corpus_stats(docs, lambda p: len(split_sentences(p.text)))
    print(f"documents : {stats.num_documents}")
    print(f"tables    : {stats.num_tables}")
    print(f"sentences : {stats.num_sentences}")
    print("rows  tables")
    for rows in sorted(stats.row_count_histogram):
        print(f"{rows:>5} {stats.row_count_histogram[rows]:>6}")
    payload = {
        "num_documents": stats.num_documents,
        "num_tables": stats.num_tables,
        "num_sentences": stats.num_sentences,
        "row_count_histogram": {str(k): v for k, v in sorted(stats.row_count_histogram.items())},
    }
    json_out = Path(args.json_out) if args.json_out else Path(args.corpus_dir) / STATS_BASENAME
    json_out.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    print(f"wrote {json_out}")
    return 0


def cmd_chunk(args) -> int:
    docs = _load_corpus(Path(args.corpus_dir))
    chunks = build_corpus(docs, _repr_config(args))
    Path(args.out).write_text(chunks_to_jsonl(chunks), encoding="utf-8")
    print(f"wrote {len(chunks)} chunks to {args.out}")
    return 0


def cmd_embed(args) -> int:
    provider = _resolve_providers([args.provider], args.embed_url)[0]
    chunks = chunks_from_jsonl(Path(args.chunks).read_text(encoding="utf-8"))
    usable = embeddable(chunks)
    skipped = len(chunks) - len(usable)
    cache = _load_cache(args.cache)
    vectors = embed_batch([c.text for c in usable], provider, cache)
    np.savez_compressed(
        args.out,
        ids=np.asarray([c.chunk_id for c in usable]),
        vectors=np.vstack(vectors) if vectors else np.zeros((0, provider.dim)),
        dim=np.int64(provider.dim),
        provider=np.str_(provider.name),
    )
    if args.cache:
        cache.save(args.cache)
    print(f"embedded {len(usable)} chunks (skipped {skipped} empty) with "
          f"{provider.name} -> {args.out}")
    return 0


def cmd_index(args) -> int:
    chunks = chunks_from_jsonl(Path(args.chunks).read_text(encoding="utf-8"))
    by_id = {c.chunk_id: c for c in chunks}
    with np.load(args.vectors) as data:
        ids = [str(i) for i in data["ids"]]
        matrix = data["vectors"]
        dim = int(data["dim"])
    index = VectorIndex(dim)
    for chunk_id, row in zip(ids, matrix):
        chunk = by_id.get(chunk_id)
        if chunk is None:
            raise CliError(f"vector file references unknown chunk {chunk_id!r}")
        index.add(chunk_id, row, chunk.provenance)
    Path(args.out).write_bytes(index.save())
    print(f"indexed {len(index)} vectors (dim {dim}) -> {args.out}")
    return 0


def cmd_query(args) -> int:
    provider = _resolve_providers([args.provider], args.embed_url)[0]
    index = VectorIndex.load(Path(args.index).read_bytes())
    query_vector = embed_batch([args.question], provider)[0]
    for hit in index.topk(query_vector, args.k):
        prov = index.provenance_map[hit.chunk_id]
        where = prov.table_id or prov.doc_id
        print(f"{hit.rank:>2}. {hit.score:+.4f} [{prov.kind.value}] {where} ({hit.chunk_id})")
    return 0


def cmd_evaluate(args) -> int:
    docs = _load_corpus(Path(args.corpus_dir))
    qa = load_qa(Path(args.qa).read_text(encoding="utf-8"))
    provider = _resolve_providers([args.provider], args.embed_url)[0]
    cfg = _repr_config(args)
    cache = _load_cache(args.cache)
    chunks = build_corpus(docs, cfg)
    index, _ = build_index_from_chunks(chunks, provider, cache)
    report = evaluate_run(qa, index, provider, args.k, cfg, cache)
    if args.cache:
        cache.save(args.cache)
    Path(args.out).write_text(emit_csv([report]), encoding="utf-8")
    per_type = ", ".join(f"{t}={v:.1f}" for t, v in report.per_type_accuracy.items())
    print(f"top-{args.k} accuracy {report.overall_accuracy:.1f}% ({per_type}) -> {args.out}")
    return 0


def cmd_grid(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    docs = _load_corpus(Path(args.corpus_dir))
    qa = load_qa(Path(args.qa).read_text(encoding="utf-8"))
    providers = _resolve_providers(args.provider, args.embed_url)
    configs = _filter_configs(args.configs)
    cache = _load_cache(args.cache)

    with _output_lock(out_dir):
        reports = run_grid(docs, qa, providers, args.k, configs, cache, parallel=args.parallel)
        if args.cache:
            cache.save(args.cache)
        (out_dir / "report.csv").write_text(emit_csv(reports), encoding="utf-8")
        (out_dir / "figure3_data.json").write_text(emit_bar_data(reports), encoding="utf-8")

    failed = [r for r in reports if r.failed is not None]
    best = best_cell(reports)
    if best is not None:
        print(f"best cell: {best.config.label} / {best.provider.name} "
              f"-> top-{best.k} accuracy {best.overall_accuracy:.1f}%")
    print(f"{len(reports)} cells ({len(failed)} failed) -> {out_dir / 'report.csv'}")
    for r in failed:
        print(f"FAILED {r.config.label} / {r.provider.name}: {r.failed}", file=sys.stderr)
    return 1 if failed else 0


# --- argument parsing --------------------------------------------------------

def _add_repr_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--chunk-level", choices=["row", "table"], required=True)
    parser.add_argument("--separator", choices=["pipe", "space"], required=True)
    parser.add_argument("--repeat-header", action="store_true")
    parser.add_argument("--include-text", action="store_true")


def _add_provider_flags(parser: argparse.ArgumentParser, multiple: bool = False) -> None:
    if multiple:
        parser.add_argument(
            "--provider", action="append", required=True,
            help="provider spec: local-hash[:DIM] or a remote model name (repeatable)",
        )
    else:
        parser.add_argument(
            "--provider", required=True,
            help="provider spec: local-hash[:DIM] or a remote model name",
        )
    parser.add_argument(
        "--embed-url", default=os.environ.get(EMBED_URL_ENV),
        help=f"embedding service base URL (default: ${EMBED_URL_ENV})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabrag",
        description="Table-aware document retrieval benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--config", metavar="FILE",
        help="JSON file with default flag values (explicit flags win)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse .docx (or re-normalize .json) into corpus JSON")
    p.add_argument("inputs", nargs="+", help=".docx/.json files or directories")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--keep-going", action="store_true",
                   help="continue past per-file parse failures")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus statistics: counts and row histogram")
    p.add_argument("corpus_dir")
    p.add_argument("--json-out", help="stats JSON path (default: CORPUS_DIR/corpus_stats.json)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("chunk", help="build the chunk corpus for one representation")
    p.add_argument("corpus_dir")
    p.add_argument("--out", required=True, help="chunk JSONL output path")
    _add_repr_flags(p)
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("embed", help="embed a chunk corpus")
    p.add_argument("chunks", help="chunk JSONL path")
    p.add_argument("--out", required=True, help="vectors .npz output path")
    p.add_argument("--cache", help="embedding cache .npz path (read and updated)")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("index", help="build a binary vector index from chunks + vectors")
    p.add_argument("chunks", help="chunk JSONL path")
    p.add_argument("vectors", help="vectors .npz path")
    p.add_argument("--out", required=True, help="index file output path")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="run one question against an index")
    p.add_argument("index", help="index file path")
    p.add_argument("question")
    p.add_argument("-k", type=int, default=None, help="results to return (default 5)")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="evaluate one (config, provider) cell")
    p.add_argument("corpus_dir")
    p.add_argument("qa", help="QA JSONL path")
    p.add_argument("--out", required=True, help="report CSV output path")
    p.add_argument("-k", type=int, default=None, help="retrieval depth (default 5)")
    p.add_argument("--cache", help="embedding cache .npz path")
    _add_repr_flags(p)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="run the 16-configuration representation grid")
    p.add_argument("corpus_dir")
    p.add_argument("qa", help="QA JSONL path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("-k", type=int, default=None, help="retrieval depth (default 5)")
    p.add_argument("--configs", help="comma-separated filter, e.g. row,pipe")
    p.add_argument("--cache", help="embedding cache .npz path")
    p.add_argument("--parallel", type=int, default=None,
                   help="concurrent grid cells (default sequential)")
    _add_provider_flags(p, multiple=True)
    p.set_defaults(func=cmd_grid)

    return parser


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if not args.config:
        return
    try:
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read --config file: {exc}")
    if not isinstance(overrides, dict):
        parser.error("--config file must hold a JSON object")
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        # config fills gaps only; anything given on the command line wins
        if getattr(args, attr, None) in (None, False):
            setattr(args, attr, value)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args, parser)
    if getattr(args, "k", None) is None and hasattr(args, "k"):
        args.k = 5
    if getattr(args, "parallel", None) is None and hasattr(args, "parallel"):
        args.parallel = 1
    try:
        return args.func(args)
    except (
        CliError,
        EvalError,
        EmbeddingError,
        IngestError,
        IndexError_,
        SchemaViolation,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
