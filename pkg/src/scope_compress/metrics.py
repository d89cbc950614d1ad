"""Answer and summary quality metrics: token F1, ROUGE-1/2/L/Lsum, corpus BLEU.

Conventions follow the common reference tools so scores are comparable:
ROUGE lowercases and keeps ``[a-z0-9]`` runs (no stemming); BLEU uses the
mteval-13a tokenization with exponential smoothing of zero n-gram counts.
"""

from __future__ import annotations

import logging
import math
import re
import string
from collections import Counter
from typing import Sequence

log = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Token F1
# ---------------------------------------------------------------------------

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


def normalize_answer(s: str) -> str:
    s = s.lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLES.sub(" ", s)
    return " ".join(s.split())


def token_f1(prediction: str, reference: str) -> float:
    pred = normalize_answer(prediction).split()
    ref = normalize_answer(reference).split()
    if not pred or not ref:
        return float(pred == ref)
    same = sum((Counter(pred) & Counter(ref)).values())
    if same == 0:
        return 0.0
    precision = same / len(pred)
    recall = same / len(ref)
    return 2 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# ROUGE
# ---------------------------------------------------------------------------

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def rouge_tokenize(text: str) -> list[str]:
    return [t for t in _NON_ALNUM.sub(" ", text.lower()).split() if t]


def _f(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _rouge_n(ref: list[str], pred: list[str], n: int) -> float:
    r, p = _ngrams(ref, n), _ngrams(pred, n)
    overlap = sum((r & p).values())
    return _f(overlap / max(sum(p.values()), 1), overlap / max(sum(r.values()), 1))


def _lcs_table(a: list[str], b: list[str]) -> list[list[int]]:
    t = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        ai = a[i - 1]
        row, prev = t[i], t[i - 1]
        for j in range(1, len(b) + 1):
            row[j] = prev[j - 1] + 1 if ai == b[j - 1] else max(prev[j], row[j - 1])
    return t


def _lcs_indices(ref: list[str], cand: list[str]) -> list[int]:
    """Positions in ``ref`` of one longest common subsequence (backtracking from the end)."""
    t = _lcs_table(ref, cand)
    i, j = len(ref), len(cand)
    out = []
    while i > 0 and j > 0:
        if ref[i - 1] == cand[j - 1]:
            out.append(i - 1)
            i -= 1
            j -= 1
        elif t[i][j - 1] > t[i - 1][j]:
            j -= 1
        else:
            i -= 1
    return out[::-1]


def _rouge_l(ref: list[str], pred: list[str]) -> float:
    if not ref or not pred:
        return 0.0
    lcs = _lcs_table(ref, pred)[-1][-1]
    return _f(lcs / len(pred), lcs / len(ref))


def _rouge_lsum(ref_sents: list[list[str]], pred_sents: list[list[str]]) -> float:
    m = sum(map(len, ref_sents))
    n = sum(map(len, pred_sents))
    if not m or not n:
        return 0.0
    ref_left = Counter(t for s in ref_sents for t in s)
    pred_left = Counter(t for s in pred_sents for t in s)
    hits = 0
    for r in ref_sents:
        union = sorted(set().union(*(_lcs_indices(r, c) for c in pred_sents)))
        for t in (r[i] for i in union):
            if ref_left[t] > 0 and pred_left[t] > 0:
                hits += 1
                ref_left[t] -= 1
                pred_left[t] -= 1
    return _f(hits / n, hits / m)


def _sentences(text: str) -> list[list[str]]:
    return [rouge_tokenize(line) for line in text.split("\n") if line]


def rouge_scores(prediction: str, reference: str) -> dict[str, float]:
    """F-measures for ROUGE-1, ROUGE-2, ROUGE-L and ROUGE-Lsum.

    Lsum treats newline-separated lines as sentences; use
    :func:`sentences_per_line` first for running prose.
    """
    ref = rouge_tokenize(reference)
    if not ref:
        log.warning("empty reference; ROUGE scores are zero")
        return {"rouge1": 0.0, "rouge2": 0.0, "rougeL": 0.0, "rougeLsum": 0.0}
    pred = rouge_tokenize(prediction)
    return {
        "rouge1": _rouge_n(ref, pred, 1),
        "rouge2": _rouge_n(ref, pred, 2),
        "rougeL": _rouge_l(ref, pred),
        "rougeLsum": _rouge_lsum(_sentences(reference), _sentences(prediction)),
    }


def sentences_per_line(text: str) -> str:
    """Put each rule-detected sentence on its own line (the ROUGE-Lsum input format)."""
    from .text import split_paragraphs, split_sentences

    lines = []
    for para in split_paragraphs(text):
        lines.extend(" ".join(s.text.split()) for s in split_sentences(para))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------

_13A_RULES = [
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
]
MAX_ORDER = 4


def tokenize_13a(line: str) -> list[str]:
    line = line.replace("<skipped>", "").replace("-\n", "").replace("\n", " ")
    if "&" in line:
        line = line.replace("&quot;", '"').replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">")
    line = f" {line} "
    for rx, repl in _13A_RULES:
        line = rx.sub(repl, line)
    return line.split()


def bleu_stats(prediction: str, reference: str) -> tuple[list[int], list[int], int, int]:
    pred = tokenize_13a(prediction)
    ref = tokenize_13a(reference)
    correct, total = [], []
    for n in range(1, MAX_ORDER + 1):
        p, r = _ngrams(pred, n), _ngrams(ref, n)
        correct.append(sum((p & r).values()))
        total.append(max(0, len(pred) - n + 1))
    return correct, total, len(pred), len(ref)


def bleu_score(predictions: Sequence[str], references: Sequence[str]) -> float:
    """Corpus BLEU in [0, 100], single reference per prediction."""
    if len(predictions) != len(references):
        raise ValueError(f"{len(predictions)} predictions vs {len(references)} references")
    correct = [0] * MAX_ORDER
    total = [0] * MAX_ORDER
    sys_len = ref_len = 0
    for p, r in zip(predictions, references):
        c, t, sl, rl = bleu_stats(p, r)
        correct = [a + b for a, b in zip(correct, c)]
        total = [a + b for a, b in zip(total, t)]
        sys_len += sl
        ref_len += rl
    if not any(correct):
        return 0.0
    bp = 1.0 if sys_len >= ref_len else (math.exp(1 - ref_len / sys_len) if sys_len else 0.0)
    log_sum = 0.0
    smooth = 1.0
    for n in range(MAX_ORDER):
        if total[n] == 0:
            # no n-grams of this order at all: the geometric mean collapses
            return 0.0
        if correct[n] == 0:
            smooth *= 2
            log_sum += math.log(100.0 / (smooth * total[n]))
        else:
            log_sum += math.log(100.0 * correct[n] / total[n])
    return bp * math.exp(log_sum / MAX_ORDER)
