"""Freeze the test fixtures under tests/fixtures.

Run once, commit the output, never regenerate inside the test suite:

    python3 scripts/build_fixtures.py

* ``eval_sample.jsonl``: 30 summarization records built from the long
  descriptions of installed Python distributions (context) and their
  one-line ``Summary`` field (reference). Fully offline.
* ``ratio_docs.jsonl``: 10 of those descriptions with 3k-8k tokens.
* ``metric_pairs.json``: 20 prediction/reference pairs with oracle scores
  from ``rouge-score``, ``sacrebleu`` and the SQuAD v1.1 answer-F1 routine
  reproduced below. None of these values come from this package.
"""

from __future__ import annotations

import collections
import json
import random
import re
import string
from importlib import metadata
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
_TOKEN = re.compile(r"\w+|[^\w\s]")


def n_tokens(text: str) -> int:
    return len(_TOKEN.findall(text))


def metadata_corpus() -> list[dict]:
    seen, docs = set(), []
    for dist in metadata.distributions():
        md = dist.metadata
        name = (md.get("Name") or "").lower().replace("_", "-")
        if not name or name in seen:
            continue
        seen.add(name)
        body = md.get_payload() or md.get("Description") or ""
        summary = " ".join((md.get("Summary") or "").split())
        if len(summary.split()) < 3 or not body.strip():
            continue
        docs.append({"id": name, "context": body.strip() + "\n", "reference": summary, "tokens": n_tokens(body)})
    return sorted(docs, key=lambda d: d["id"])


# --- SQuAD v1.1 answer F1, as published with the dataset --------------------

def _squad_normalize(s):
    def remove_articles(text):
        return re.sub(r"\b(a|an|the)\b", " ", text)

    def white_space_fix(text):
        return " ".join(text.split())

    def remove_punc(text):
        exclude = set(string.punctuation)
        return "".join(ch for ch in text if ch not in exclude)

    return white_space_fix(remove_articles(remove_punc(s.lower())))


def _squad_f1(prediction, ground_truth):
    prediction_tokens = _squad_normalize(prediction).split()
    ground_truth_tokens = _squad_normalize(ground_truth).split()
    if not prediction_tokens or not ground_truth_tokens:
        return float(prediction_tokens == ground_truth_tokens)
    common = collections.Counter(prediction_tokens) & collections.Counter(ground_truth_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = 1.0 * num_same / len(prediction_tokens)
    recall = 1.0 * num_same / len(ground_truth_tokens)
    return (2 * precision * recall) / (precision + recall)


PAIRS = [
    ("The cat sat on the mat.", "The cat sat on the mat."),
    ("A cat sat on a mat.", "The cat is sitting on the mat."),
    ("Paris", "Paris, France"),
    ("the Eiffel Tower", "Eiffel Tower"),
    ("1903", "in 1903"),
    ("no overlap here", "completely different words"),
    ("Marie Curie won the Nobel Prize in Physics in 1903.\nShe won again in 1911.",
     "Marie Curie received the 1903 Nobel Prize in Physics.\nIn 1911 she won the chemistry prize."),
    ("The quick brown fox jumps over the lazy dog", "A quick brown dog jumps over the lazy fox"),
    ("It costs $3.50 per unit, i.e. cheap.", "The price is 3.50 dollars per unit."),
    ("U.S. GDP grew 2.5% in 2023.", "In 2023, US GDP grew by 2.5 percent."),
    ("rain rain rain", "rain"),
    ("Rome was not built in a day.\nPatience matters.\nSo does planning.",
     "Patience matters.\nRome was not built in one day."),
    ("The model compresses long prompts by summarizing less relevant chunks.",
     "Long prompts are compressed by summarizing chunks that are less relevant."),
    ("Don't panic; it's fine.", "Do not panic, it is fine."),
    ("Einstein, Albert (1879-1955)", "Albert Einstein 1879 - 1955"),
    ("The answer is forty-two.", "42"),
    ("New York City is large.\nIt has five boroughs.", "New York City has five boroughs.\nIt is large."),
    ("a b c d", "a b c d e"),
    ("Dataset contains 1,024 samples & 3 labels.", "The dataset has 1,024 samples and 3 labels."),
    ("Summaries keep key terms such as dates (1969) and names (Neil Armstrong).",
     "Neil Armstrong walked on the Moon in 1969, and the summary keeps both terms."),
]


def metric_fixture() -> dict:
    import sacrebleu
    from rouge_score import rouge_scorer

    scorer = rouge_scorer.RougeScorer(["rouge1", "rouge2", "rougeL", "rougeLsum"], use_stemmer=False)
    rows = []
    for pred, ref in PAIRS:
        rs = scorer.score(ref, pred)
        rows.append({
            "prediction": pred,
            "reference": ref,
            "token_f1": _squad_f1(pred, ref),
            **{k: v.fmeasure for k, v in rs.items()},
            "bleu": sacrebleu.corpus_bleu([pred], [[ref]]).score,
        })
    corpus = sacrebleu.corpus_bleu([p for p, _ in PAIRS], [[r for _, r in PAIRS]]).score
    return {
        "oracles": {"rouge": "rouge-score (use_stemmer=False)", "bleu": f"sacrebleu {sacrebleu.__version__}",
                    "token_f1": "SQuAD v1.1 evaluation routine"},
        "pairs": rows,
        "corpus_bleu": corpus,
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    docs = metadata_corpus()

    pool = [d for d in docs if 1500 <= d["tokens"] <= 12000]
    sample = sorted(random.Random(0).sample(pool, 30), key=lambda d: d["id"])
    with open(OUT / "eval_sample.jsonl", "w", encoding="utf-8") as fh:
        for d in sample:
            fh.write(json.dumps({"id": d["id"], "task": "summarization", "context": d["context"],
                                 "reference": d["reference"]}, ensure_ascii=False) + "\n")

    mid = [d for d in docs if 3000 <= d["tokens"] <= 8000]
    chosen = sorted(random.Random(1).sample(mid, 10), key=lambda d: d["id"])
    with open(OUT / "ratio_docs.jsonl", "w", encoding="utf-8") as fh:
        for d in chosen:
            fh.write(json.dumps({"id": d["id"], "text": d["context"]}, ensure_ascii=False) + "\n")

    (OUT / "metric_pairs.json").write_text(json.dumps(metric_fixture(), indent=1, ensure_ascii=False) + "\n")
    print(f"eval_sample: {len(sample)} of {len(pool)}; ratio_docs: {len(chosen)} of {len(mid)}")


if __name__ == "__main__":
    main()
