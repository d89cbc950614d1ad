"""Command line entry point: ``scope compress | chunk | eval``.

Exit codes: 0 success, 2 configuration error, 3 backend failure, 4 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .chunker import ChunkerConfig, score_chunks, semantic_chunk
from .errors import BackendError, ConfigError, InputError
from .pipeline import RunConfig, compress, full_context_embedding, safe_resolve, write_report

EXIT_OK, EXIT_CONFIG, EXIT_BACKEND, EXIT_INPUT = 0, 2, 3, 4

log = logging.getLogger("scope")


def _read_input(path: str) -> str:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read input {path!r}: {exc.strerror}") from None
    except UnicodeDecodeError as exc:
        raise InputError(f"input {path!r} is not UTF-8: {exc}") from None
    if not text.strip():
        raise InputError("input is empty")
    return text


def _write_output(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(path).write_text(text, encoding="utf-8")


def _add_chunker_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-chunk-tokens", type=int, default=800)
    p.add_argument("--min-chunk-tokens", type=int, default=200)
    p.add_argument("--tiny-merge-tokens", type=int, default=100)
    p.add_argument("--tau", type=float, default=0.5, help="similarity threshold for candidate split points")
    p.add_argument("--embedder", default="stub:hash", help="http:URL | local:MODEL_ID | stub:NAME")
    p.add_argument("--tokenizer", default=None, help="regex | hf:MODEL_ID (default: the summarizer's)")


def _chunker_config(args) -> ChunkerConfig:
    return ChunkerConfig(args.max_chunk_tokens, args.min_chunk_tokens, args.tau, args.tiny_merge_tokens)


def _run_config(args, rho: float) -> RunConfig:
    return RunConfig(
        rho=rho,
        chunker=_chunker_config(args),
        embedder=args.embedder,
        summarizer=args.summarizer,
        tokenizer=args.tokenizer,
        seed=args.seed,
        early_stop=not args.no_early_stop,
        parallel=args.parallel,
    )


def cmd_compress(args) -> int:
    text = _read_input(args.input)
    cfg = _run_config(args, args.ratio)
    cfg.validate()
    backends = safe_resolve(cfg)
    result = compress(text, cfg, backends=backends)
    _write_output(args.output, result.compressed_text)
    if args.report:
        write_report(result, args.report, figures=not args.no_figures)
    log.info("compressed %d -> %d tokens (ratio %.2f)", result.input_tokens, result.output_tokens,
             result.achieved_ratio)
    return EXIT_OK


def cmd_chunk(args) -> int:
    text = _read_input(args.input)
    cfg = RunConfig(chunker=_chunker_config(args), embedder=args.embedder, summarizer="stub:truncate",
                    tokenizer=args.tokenizer)
    embedder, _, tok = safe_resolve(cfg)
    notes: list[str] = []
    body = text.lstrip()
    chunks = semantic_chunk(body, cfg.chunker, embedder, tok, notes=notes)
    chunks = score_chunks(chunks, full_context_embedding(body, embedder, tok, warnings=notes))
    offset = len(text) - len(body)
    rows = []
    for c in chunks:
        rows.append({**c.to_dict(), "start": offset, "end": offset + len(c.text)})
        offset += len(c.text) + len(c.trailing_separator)
    payload = {"config": asdict(cfg.chunker), "tokenizer": tok.name,
               "chunks": rows, "warnings": notes}
    _write_output(args.output, json.dumps(payload, indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import load_jsonl, run_eval, sample_records, write_csv, write_eval_report

    try:
        records = load_jsonl(args.corpus)
    except OSError as exc:
        raise InputError(f"cannot read corpus {args.corpus!r}: {exc.strerror}") from None
    records = sample_records(records, args.sample, args.seed)
    reports = []
    for rho in args.ratio:
        cfg = _run_config(args, rho)
        cfg.validate()
        rep = run_eval(records, cfg, args.llm, answer_tokens=args.answer_tokens,
                       summary_tokens=args.summary_tokens, bertscore=args.bertscore, workers=args.workers)
        reports.append(rep)
        print(f"rho={rho:g} n={len(rep.rows)} " + " ".join(f"{k}={v:.4f}" for k, v in rep.means.items()))
    if args.report:
        write_eval_report(reports, args.report, figures=not args.no_figures)
    if args.csv:
        write_csv(reports, args.csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scope", description="Generative prompt compression.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a document")
    p.add_argument("--input", required=True, help="path or - for stdin")
    p.add_argument("--output", default="-", help="path or - for stdout")
    p.add_argument("--ratio", type=float, required=True, help="target compression ratio (>= 1)")
    _add_chunker_args(p)
    p.add_argument("--summarizer", default="stub:truncate")
    p.add_argument("--report", help="write a JSON run report (and a budget figure) here")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("chunk", help="show chunk boundaries as JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    _add_chunker_args(p)
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("eval", help="evaluate on a JSONL corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratio", type=float, action="append", required=True, help="repeatable")
    p.add_argument("--llm", default="stub:echo", help="downstream model spec")
    _add_chunker_args(p)
    p.add_argument("--summarizer", default="stub:truncate")
    p.add_argument("--sample", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--answer-tokens", type=int, default=32)
    p.add_argument("--summary-tokens", type=int, default=128)
    p.add_argument("--bertscore", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", help="JSON report path (a metrics figure is written beside it)")
    p.add_argument("--csv", help="per-record CSV path")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
