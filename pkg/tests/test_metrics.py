import pytest
from hypothesis import given
from hypothesis import strategies as st

from scope_compress.metrics import (
    bleu_score,
    normalize_answer,
    rouge_scores,
    sentences_per_line,
    token_f1,
)

ROUGE_KEYS = ("rouge1", "rouge2", "rougeL", "rougeLsum")


def test_token_f1_examples():
    assert token_f1("Paris", "Paris") == 1.0
    assert token_f1("", "x") == 0.0
    assert token_f1("", "") == 1.0
    assert token_f1("x b c", "b c d") == pytest.approx(2 / 3, abs=1e-4)
    # "a" is an article and is dropped by the normalization: P=1, R=2/3
    assert token_f1("a b c", "b c d") == pytest.approx(0.8)


def test_normalize_answer():
    assert normalize_answer("The  Eiffel-Tower!") == "eiffeltower"
    assert normalize_answer("An apple, a day") == "apple day"


def test_rouge_examples():
    assert all(v == 1.0 for v in rouge_scores("the cat sat", "the cat sat").values())
    assert rouge_scores("the cat sat", "the cat ran")["rouge1"] == pytest.approx(2 / 3)
    assert all(v == 0.0 for v in rouge_scores("alpha beta", "gamma delta").values())


def test_rouge_empty_reference_warns(caplog):
    assert all(v == 0.0 for v in rouge_scores("text", "  ").values())
    assert "empty reference" in caplog.text


def test_bleu_examples():
    assert bleu_score(["the cat sat on the mat"], ["the cat sat on the mat"]) == pytest.approx(100.0)
    short = bleu_score(["the cat sat on"], ["the cat sat on the mat today"])
    assert 0 < short < 100
    with pytest.raises(ValueError):
        bleu_score(["a"], [])
    assert bleu_score([], []) == 0.0


def test_sentences_per_line():
    assert sentences_per_line("One here. Two there!\n\nThree.") == "One here.\nTwo there!\nThree."


def test_fixture_agreement(metric_fixture):
    for row in metric_fixture["pairs"]:
        p, r = row["prediction"], row["reference"]
        assert token_f1(p, r) == pytest.approx(row["token_f1"], abs=1e-3)
        got = rouge_scores(p, r)
        for k in ROUGE_KEYS:
            assert got[k] == pytest.approx(row[k], abs=1e-3), (k, p, r)
        assert bleu_score([p], [r]) == pytest.approx(row["bleu"], abs=1e-3)
    preds = [row["prediction"] for row in metric_fixture["pairs"]]
    refs = [row["reference"] for row in metric_fixture["pairs"]]
    assert bleu_score(preds, refs) == pytest.approx(metric_fixture["corpus_bleu"], abs=1e-3)


text = st.text(max_size=60)


@given(text, text)
def test_ranges_and_no_crash(p, r):
    assert 0.0 <= token_f1(p, r) <= 1.0
    for v in rouge_scores(p, r).values():
        assert 0.0 <= v <= 1.0
    assert 0.0 <= bleu_score([p], [r]) <= 100.0 + 1e-9


@given(st.text(alphabet="abc xyz.", min_size=1, max_size=40))
def test_identical_is_maximal(s):
    if normalize_answer(s):
        assert token_f1(s, s) == 1.0
    scores = rouge_scores(s, s)
    n_tokens = len([w for w in s.replace(".", " ").split() if w])
    if n_tokens:
        assert scores["rouge1"] == scores["rougeL"] == scores["rougeLsum"] == pytest.approx(1.0)
        # no bigrams to match in a one-token string
        assert scores["rouge2"] == (1.0 if n_tokens > 1 else 0.0)
