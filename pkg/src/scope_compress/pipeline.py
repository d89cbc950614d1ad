"""End-to-end compression: chunk, score, extract keywords, allocate, compress, reassemble."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .allocator import CompressionPlan, allocate
from .backends import Embedder, Summarizer, resolve_embedder, resolve_summarizer
from .chunker import Chunk, ChunkerConfig, score_chunks, semantic_chunk
from .compressor import ChunkOutcome, run_plan
from .errors import BackendError, ConfigError, InputError
from .keywords import KeywordSet, extract_keywords
from .text import Tokenizer, get_tokenizer

log = logging.getLogger(__name__)

REPORT_SCHEMA = "scope-report/1"
CORPUS_TOKEN_RANGE = (3000, 50000)


@dataclass
class RunConfig:
    rho: float = 2.0
    chunker: ChunkerConfig = field(default_factory=ChunkerConfig)
    embedder: str | Embedder = "stub:hash"
    summarizer: str | Summarizer = "stub:truncate"
    tokenizer: str | None = None  # None: the summarizer's own tokenizer
    report_path: str | None = None
    seed: int = 0
    early_stop: bool = True
    parallel: int = 1
    truncation_floor: float = 0.3

    def validate(self) -> None:
        if not isinstance(self.rho, (int, float)) or math.isnan(self.rho) or self.rho < 1:
            raise ConfigError(f"ratio must be a number >= 1, got {self.rho!r}")
        if self.parallel < 1:
            raise ConfigError("parallel must be >= 1")
        if not 0 < self.truncation_floor <= 1:
            raise ConfigError("truncation_floor must be in (0, 1]")

    def snapshot(self) -> dict:
        def spec(b):
            return b if isinstance(b, str) or b is None else b.handle.spec

        return {
            "rho": self.rho,
            "chunker": asdict(self.chunker),
            "embedder": spec(self.embedder),
            "summarizer": spec(self.summarizer),
            "tokenizer": self.tokenizer,
            "seed": self.seed,
            "early_stop": self.early_stop,
            "parallel": self.parallel,
            "truncation_floor": self.truncation_floor,
        }


@dataclass
class CompressionResult:
    compressed_text: str
    achieved_ratio: float
    input_tokens: int
    output_tokens: int
    outcomes: list[ChunkOutcome]
    config_snapshot: dict
    warnings: list[str]
    chunks: list[Chunk] = field(default_factory=list, repr=False)
    plan: CompressionPlan | None = field(default=None, repr=False)
    keywords: dict[int, KeywordSet] = field(default_factory=dict, repr=False)

    @property
    def early_stopped(self) -> bool:
        return any(o.action == "early_stopped" for o in self.outcomes)

    def to_report(self) -> dict:
        by_ref = {o.chunk_ref: o for o in self.outcomes}
        return {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "config": self.config_snapshot,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "achieved_ratio": self.achieved_ratio,
            "model_calls": sum(o.model_calls for o in self.outcomes),
            "retries": sum(o.retries for o in self.outcomes),
            "chunks": [
                {**{k: v for k, v in c.to_dict().items() if k != "text"},
                 "keywords": list(self.keywords.get(c.original_index, KeywordSet(c.original_index)).terms)}
                for c in self.chunks
            ],
            "plan": self.plan.to_dict() if self.plan else None,
            "outcomes": [by_ref[c.original_index].to_dict() for c in self.chunks if c.original_index in by_ref],
            "processing_order": [o.chunk_ref for o in self.outcomes],
            "warnings": list(self.warnings),
        }


def reassemble(outcomes: Sequence[ChunkOutcome], separators: Sequence[str]) -> str:
    """Join outcome texts in original order using the recorded separators."""
    ordered = sorted(outcomes, key=lambda o: o.chunk_ref)
    refs = [o.chunk_ref for o in ordered]
    if refs != list(range(len(separators))):
        raise RuntimeError(f"outcomes do not cover chunk indices 0..{len(separators) - 1}: {refs}")
    return "".join(o.output_text + sep for o, sep in zip(ordered, separators))


def full_context_embedding(essay: str, embedder: Embedder, tokenizer: Tokenizer,
                           chunks: Sequence[Chunk] | None = None, warnings: list[str] | None = None) -> np.ndarray:
    """Embed the whole essay, or mean-pool windows when it exceeds the embedder's input limit."""
    limit = embedder.max_input_tokens
    if limit is None or tokenizer.count(essay) <= limit:
        return embedder.embed([essay])[0]
    spans = tokenizer.spans(essay)
    pieces = [essay[spans[k][0] : spans[min(k + limit, len(spans)) - 1][1]] for k in range(0, len(spans), limit)]
    if warnings is not None:
        warnings.append(f"essay exceeds embedder window ({limit} tokens); full-context embedding is a "
                        f"mean of {len(pieces)} window embeddings")
    vecs = np.array(embedder.embed(pieces))
    return vecs.mean(axis=0)


def resolve_backends(cfg: RunConfig) -> tuple[Embedder, Summarizer, Tokenizer]:
    """Resolve handles up front so a bad spec fails before any model call."""
    tok = get_tokenizer(cfg.tokenizer) if cfg.tokenizer else None
    embedder = resolve_embedder(cfg.embedder)
    summarizer = resolve_summarizer(cfg.summarizer, tok)
    return embedder, summarizer, tok or summarizer.tokenizer


def compress(essay: str, cfg: RunConfig | None = None, *, backends=None) -> CompressionResult:
    """Compress ``essay`` to roughly ``1/rho`` of its tokens."""
    cfg = cfg or RunConfig()
    cfg.validate()
    if not isinstance(essay, str) or not essay.strip():
        raise InputError("essay must be a nonempty string")
    embedder, summarizer, tok = backends or resolve_backends(cfg)
    warnings: list[str] = []

    # leading whitespace is reattached verbatim
    body = essay.lstrip()
    lead = essay[: len(essay) - len(body)]

    total = tok.count(essay)
    lo, hi = CORPUS_TOKEN_RANGE
    if not lo <= total <= hi:
        warnings.append(f"input has {total} tokens, outside the {lo}-{hi} range the method was evaluated on")

    essay_vec = full_context_embedding(body, embedder, tok, warnings=warnings)
    chunks = semantic_chunk(body, cfg.chunker, embedder, tok, notes=warnings)
    chunks = score_chunks(chunks, essay_vec)
    keywords = {c.original_index: extract_keywords(c) for c in chunks}

    chunk_total = sum(c.token_count for c in chunks)
    if chunk_total != total:
        warnings.append(f"tokenizer is not additive over chunks: essay {total} vs chunk sum {chunk_total}")
    plan = allocate(chunks, rho=cfg.rho)
    warnings.extend(plan.warnings)

    outcomes = run_plan(chunks, plan, keywords, summarizer, tok, early_stop=cfg.early_stop,
                        parallel=cfg.parallel, floor_fraction=cfg.truncation_floor)
    for o in outcomes:
        warnings.extend(f"chunk {o.chunk_ref}: {w}" for w in o.warnings)
    if any(o.action == "early_stopped" for o in outcomes):
        n = sum(o.action == "early_stopped" for o in outcomes)
        warnings.append(f"early stop fired: {n} highest-relevance chunks kept verbatim")

    text = lead + reassemble(outcomes, [c.trailing_separator for c in chunks])
    out_tokens = tok.count(text)
    ratio = total / out_tokens if out_tokens else math.inf
    snapshot = cfg.snapshot()
    snapshot["tokenizer_resolved"] = tok.name
    snapshot["keyword_emphasis"] = "prefix" if summarizer.instruction_capable else "substitution"
    result = CompressionResult(text, ratio, total, out_tokens, outcomes, snapshot, warnings,
                               chunks=chunks, plan=plan, keywords=keywords)
    if cfg.report_path:
        write_report(result, cfg.report_path)
    return result


def write_report(result: CompressionResult, path: str | Path, figures: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(result.to_report(), indent=2, ensure_ascii=False), encoding="utf-8")
    if figures:
        from .plotting import plot_budget

        plot_budget(result.to_report(), path.with_name(path.stem + "_budget.png"))
    return path


def safe_resolve(cfg: RunConfig):
    """Like :func:`resolve_backends` but turns loader crashes into ``BackendError``."""
    try:
        return resolve_backends(cfg)
    except (ConfigError, BackendError):
        raise
    except Exception as exc:  # noqa: BLE001
        raise BackendError(f"backend resolution failed: {exc}", retryable=False) from exc
