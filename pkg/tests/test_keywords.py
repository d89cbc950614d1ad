from hypothesis import given, settings
from hypothesis import strategies as st

from scope_compress.chunker import Chunk
from scope_compress.keywords import (
    KeywordSet,
    cap_keywords,
    extract_keywords,
    extract_terms,
    substitute_if_truncated,
    truncation_floor,
)
from scope_compress.text import DEFAULT_TOKENIZER as TOK


def test_worked_example():
    assert extract_terms("Marie Curie won the Nobel Prize in 1903.") == ["Marie Curie", "Nobel Prize", "1903"]


def test_no_entities():
    assert extract_keywords("the cat sat").terms == ()


def test_dedup_first_occurrence():
    assert extract_terms("Paris is big. We love Paris. PARIS again.") == ["Paris"]


def test_stop_listed_sentence_starts_are_dropped():
    assert extract_terms("The river rose. However, it fell.") == []
    assert extract_terms("The Hague hosts courts.") == ["Hague"]


def test_numbers_dates_quotes():
    terms = extract_terms('On 12 March 2020 prices rose 40% to $3.50, about 3.5 km from the "old mill".')
    assert terms == ["12 March 2020", "40%", "$3.50", "3.5 km", '"old mill"']


def test_chunk_ref_kept():
    kw = extract_keywords(Chunk("Ada Lovelace wrote notes.", 4, 5))
    assert kw == KeywordSet(4, ("Ada Lovelace",))


def test_custom_extractor_filtered_to_verbatim_terms():
    kw = extract_keywords("alpha beta", extractor=lambda t: ["alpha", "gamma", ""])
    assert kw.terms == ("alpha",)


def test_substitution_rules():
    kw = KeywordSet(0, ("Nobel Prize", "1903"))
    summary45 = " ".join(["word"] * 45)
    assert substitute_if_truncated(summary45, kw, 50) == summary45
    assert substitute_if_truncated("junk junk junk", kw, 50) == "Nobel Prize; 1903"
    assert substitute_if_truncated("tiny", KeywordSet(0), 50) == "tiny"
    assert truncation_floor(50) == 15


def test_substitution_capped_at_target():
    kw = KeywordSet(0, ("Alpha Beta Gamma", "Delta", "Epsilon"))
    assert cap_keywords(kw.terms, 4) == "Alpha Beta Gamma"
    assert cap_keywords(kw.terms, 2) == "Alpha Beta"


words = st.sampled_from(["Marie", "Curie", "the", "The", "river", "Paris", "In", "1903", "3.5", "km", "March",
                         "2020", '"quoted', 'bit"', "however", "However", "New", "York", ",", ".", "40%", "$5"])


@settings(max_examples=300)
@given(st.lists(words, max_size=40))
def test_terms_are_verbatim_and_idempotent(tokens):
    text = " ".join(tokens)
    terms = extract_terms(text)
    assert all(t and t.casefold() in text.casefold() for t in terms)
    again = {t.casefold() for t in extract_terms("; ".join(terms))}
    assert {t.casefold() for t in terms} <= again
    assert extract_terms(text) == terms


@given(st.lists(words, max_size=40), st.integers(1, 30))
def test_substitution_never_exceeds_target(tokens, target):
    kw = extract_keywords(" ".join(tokens) or "x")
    out = substitute_if_truncated("x", kw, target)
    assert TOK.count(out) <= max(target, 1)
