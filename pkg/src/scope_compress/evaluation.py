"""Desk-scale evaluation: compress each context, query a downstream model, score the answer."""

from __future__ import annotations

import csv
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import mean
from typing import Iterable, Sequence

from .backends import Summarizer, SummaryRequest, resolve_summarizer
from .errors import BackendError, InputError, ScopeError
from .keywords import extract_terms
from .metrics import bleu_score, rouge_scores, sentences_per_line, token_f1
from .pipeline import RunConfig, compress, safe_resolve

log = logging.getLogger(__name__)

EVAL_SCHEMA = "scope-eval/1"
TASKS = ("qa", "summarization")

# Used only with instruction-capable downstream models; not taken from any benchmark.
DEFAULT_TEMPLATES = {
    "qa": "Answer the question using only the context. Reply with a short answer.\n\n"
          "Context:\n{context}\n\nQuestion: {question}\nAnswer:",
    "summarization": "Write a concise summary of the following document.\n\n{context}\n\nSummary:",
}


@dataclass(frozen=True)
class EvalRecord:
    id: str
    context: str
    reference: str
    task: str = "qa"
    question: str | None = None

    def __post_init__(self):
        if not self.context or not self.context.strip():
            raise InputError(f"record {self.id!r}: empty context")
        if not self.reference or not self.reference.strip():
            raise InputError(f"record {self.id!r}: empty reference")
        if self.task not in TASKS:
            raise InputError(f"record {self.id!r}: task must be one of {TASKS}")

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        try:
            return cls(str(d["id"]), d["context"], d["reference"], d.get("task", "qa"), d.get("question"))
        except KeyError as exc:
            raise InputError(f"record missing field {exc}") from None


def load_jsonl(path: str | Path) -> list[EvalRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(EvalRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON ({exc})") from None
    return records


def sample_records(records: Sequence[EvalRecord], n: int | None, seed: int = 0) -> list[EvalRecord]:
    """Uniform sample without replacement; everything when ``n`` is None or too large."""
    if n is None or n >= len(records):
        return list(records)
    return random.Random(seed).sample(list(records), n)


@dataclass
class MetricReport:
    rho: float
    rows: list[dict]
    means: dict[str, float]
    corpus_bleu: float | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": EVAL_SCHEMA,
            "rho": self.rho,
            "n_records": len(self.rows),
            "means": self.means,
            "corpus_bleu": self.corpus_bleu,
            "records": self.rows,
            "warnings": self.warnings,
        }


def _downstream_request(rec: EvalRecord, context: str, llm: Summarizer, templates: dict, max_tokens: int):
    if llm.instruction_capable:
        text = templates[rec.task].format(context=context, question=rec.question or "")
        keywords: Sequence[str] = ()
    else:
        # plain seq2seq/extractive models take the context alone; the question steers via keywords
        text = context
        keywords = extract_terms(rec.question) if rec.question else ()
    return SummaryRequest(text, max_tokens, 0, tuple(keywords))


def _score(rec: EvalRecord, prediction: str, bertscore) -> dict[str, float]:
    if rec.task == "qa":
        return {"f1": token_f1(prediction, rec.reference)}
    scores = rouge_scores(sentences_per_line(prediction), sentences_per_line(rec.reference))
    scores["bleu"] = bleu_score([prediction], [rec.reference])
    if bertscore is not None:
        scores["bertscore"] = bertscore(prediction, rec.reference)
    return scores


def _bertscore_fn(warnings: list[str]):
    try:
        from bert_score import score as bs
    except ImportError:
        warnings.append("bertscore requested but the bert-score package is not installed; skipped")
        return None

    def fn(pred: str, ref: str) -> float:
        _, _, f1 = bs([pred], [ref], lang="en", verbose=False)
        return float(f1[0])

    return fn


def run_eval(
    corpus: Iterable[EvalRecord],
    cfg: RunConfig,
    llm: str | Summarizer,
    *,
    templates: dict | None = None,
    answer_tokens: int = 32,
    summary_tokens: int = 128,
    bertscore: bool = False,
    workers: int = 1,
) -> MetricReport:
    """Evaluate one compression ratio over a corpus.

    Per-record failures are recorded in the row's ``error`` field and do not
    abort the run. Rows come back sorted by record id.
    """
    records = list(corpus)
    warnings: list[str] = []
    cfg = replace(cfg, report_path=None)
    if not records:
        return MetricReport(cfg.rho, [], {}, None, warnings)
    templates = {**DEFAULT_TEMPLATES, **(templates or {})}
    backends = safe_resolve(cfg)
    llm = resolve_summarizer(llm)
    bs = _bertscore_fn(warnings) if bertscore else None

    def one(rec: EvalRecord) -> dict:
        row: dict = {"id": rec.id, "task": rec.task, "rho": cfg.rho}
        try:
            result = compress(rec.context, cfg, backends=backends)
        except ScopeError as exc:
            row["error"] = f"compression failed: {exc}"
            return row
        row.update(input_tokens=result.input_tokens, output_tokens=result.output_tokens,
                   achieved_ratio=result.achieved_ratio)
        budget = answer_tokens if rec.task == "qa" else summary_tokens
        try:
            prediction = llm.summarize(_downstream_request(rec, result.compressed_text, llm, templates, budget))
        except BackendError as exc:
            row["error"] = f"downstream model failed: {exc}"
            return row
        row["prediction"] = prediction
        row.update(_score(rec, prediction, bs))
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, records))
    else:
        rows = [one(r) for r in records]
    rows.sort(key=lambda r: r["id"])

    failed = [r for r in rows if "error" in r]
    for r in failed:
        warnings.append(f"record {r['id']}: {r['error']}")
    metric_keys = sorted({k for r in rows for k in ("f1", "rouge1", "rouge2", "rougeL", "rougeLsum", "bleu",
                                                    "bertscore", "achieved_ratio") if k in r})
    means = {k: mean(r[k] for r in rows if k in r) for k in metric_keys}
    summ = [r for r in rows if r["task"] == "summarization" and "prediction" in r]
    refs = {rec.id: rec.reference for rec in records}
    corpus_bleu = bleu_score([r["prediction"] for r in summ], [refs[r["id"]] for r in summ]) if summ else None
    return MetricReport(cfg.rho, rows, means, corpus_bleu, warnings)


CSV_FIELDS = ["id", "task", "rho", "input_tokens", "output_tokens", "achieved_ratio", "f1", "rouge1", "rouge2",
              "rougeL", "rougeLsum", "bleu", "bertscore", "error"]


def write_csv(reports: Sequence[MetricReport], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        w.writeheader()
        for rep in reports:
            w.writerows(rep.rows)
    return path


def write_eval_report(reports: Sequence[MetricReport], path: str | Path, figures: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"schema": EVAL_SCHEMA, "runs": [r.to_dict() for r in reports]}
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
    if figures and reports and any(r.rows for r in reports):
        from .plotting import plot_metrics

        series = {r.rho: {k: v for k, v in r.means.items() if k not in ("achieved_ratio", "bleu")}
                  for r in reports}
        plot_metrics(series, path.with_name(path.stem + "_metrics.png"))
    return path
