import json
import random

import numpy as np
import pytest

from scope_compress import RunConfig, compress, reassemble
from scope_compress.backends import HashEmbedder
from scope_compress.compressor import ChunkOutcome
from scope_compress.errors import BackendError, ConfigError, InputError
from scope_compress.pipeline import REPORT_SCHEMA, full_context_embedding, resolve_backends, write_report
from scope_compress.text import DEFAULT_TOKENIZER as TOK


def two_section_essay():
    a = " ".join(f"River delta silt flood number {i} rises." for i in range(60))
    b = " ".join(f"Market bond yield case {i} falls." for i in range(71))
    return a + "\n\n\n" + b


def test_identity_at_rho_one(essay_factory):
    essay = essay_factory(random.Random(2), 2500)
    assert compress(essay, RunConfig(rho=1)).compressed_text == essay


def test_two_section_budget_and_order():
    essay = two_section_essay()
    n = TOK.count(essay)
    res = compress(essay, RunConfig(rho=2))
    assert res.input_tokens == n
    assert res.output_tokens == n // 2
    assert res.output_tokens == TOK.count(res.compressed_text)
    assert res.achieved_ratio == pytest.approx(n / res.output_tokens)
    assert res.compressed_text.index("River") < res.compressed_text.index("Market")


def test_real_summarizer_band(ratio_docs):
    doc = min(ratio_docs, key=lambda d: TOK.count(d["text"]))
    res = compress(doc["text"], RunConfig(rho=3, summarizer="local:extractive"))
    assert 2.55 <= res.achieved_ratio <= 3.45


def test_reassemble_examples():
    outs = [ChunkOutcome(i, "kept_verbatim", t, 1, 1) for i, t in enumerate(["A.", "B.", "C."])]
    seps = [" ", "\n\n", ""]
    assert reassemble(outs, seps) == "A. B.\n\nC."
    assert reassemble(outs[::-1], seps) == "A. B.\n\nC."
    outs[1] = ChunkOutcome(1, "substituted_keywords", "Kw; 1903", 3, 5)
    assert reassemble(outs, seps) == "A. Kw; 1903\n\nC."
    with pytest.raises(RuntimeError):
        reassemble(outs[:2], seps)


def test_deterministic(essay_factory):
    essay = essay_factory(random.Random(5), 4000)
    a = compress(essay, RunConfig(rho=3))
    b = compress(essay, RunConfig(rho=3))
    assert a.compressed_text == b.compressed_text
    assert a.to_report() == b.to_report()


def test_early_stop_can_be_disabled(essay_factory):
    essay = essay_factory(random.Random(9), 3000)
    res = compress(essay, RunConfig(rho=2, early_stop=False))
    assert not res.early_stopped


def test_leading_whitespace_is_kept():
    essay = "\n\n  " + two_section_essay()
    res = compress(essay, RunConfig(rho=1))
    assert res.compressed_text == essay


def test_errors():
    with pytest.raises(InputError):
        compress("   ", RunConfig())
    with pytest.raises(ConfigError):
        compress("text", RunConfig(rho=0.5))
    with pytest.raises(ConfigError):
        compress("text", RunConfig(summarizer="bogus"))
    with pytest.raises(ConfigError):
        compress("text", RunConfig(parallel=0))


def test_model_load_failure_fails_before_work(monkeypatch):
    monkeypatch.setenv("HF_HUB_OFFLINE", "1")
    with pytest.raises(BackendError):
        compress("Some text here.", RunConfig(summarizer="local:no-such-org/no-such-model"))


def test_length_warning():
    res = compress("Short text. Nothing more.", RunConfig(rho=2))
    assert any("outside the 3000-50000" in w for w in res.warnings)


def test_full_context_embedding_pools_long_inputs():
    emb = HashEmbedder()
    emb.max_input_tokens = 4
    notes = []
    text = "one two three four five six seven eight nine"
    vec = full_context_embedding(text, emb, TOK, warnings=notes)
    parts = emb.embed(["one two three four", "five six seven eight", "nine"])
    assert np.allclose(vec, np.mean(parts, axis=0))
    assert notes


def test_report_and_figure(tmp_path, essay_factory):
    essay = essay_factory(random.Random(1), 3500)
    res = compress(essay, RunConfig(rho=3))
    path = write_report(res, tmp_path / "run.json")
    report = json.loads(path.read_text())
    assert report["schema"] == REPORT_SCHEMA
    assert report["config"]["rho"] == 3
    assert len(report["outcomes"]) == len(report["chunks"]) == len(res.chunks)
    assert report["plan"]["delta_total"] == res.input_tokens - res.input_tokens // 3
    assert (tmp_path / "run_budget.png").stat().st_size > 0


def test_report_path_in_config(tmp_path):
    compress(two_section_essay(), RunConfig(rho=2, report_path=str(tmp_path / "r.json")))
    assert (tmp_path / "r.json").exists()


def test_backends_reused_across_calls():
    b = resolve_backends(RunConfig())
    essay = two_section_essay()
    for rho in (2, 3):
        assert compress(essay, RunConfig(rho=rho), backends=b).output_tokens == TOK.count(essay) // rho
