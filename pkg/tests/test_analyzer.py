"""Pruning, classification, complexity, and the external-analyzer fallback."""

from __future__ import annotations

import random

import pytest

from optiroute.analyzer import (
    ANALYZER_VERSION,
    DOMAIN_LEXICONS,
    NEGATION_PATTERNS,
    MULTISTEP_PATTERNS,
    PRUNE_MARKER,
    TASK_RULES,
    PruneConfig,
    TaskProfile,
    analyze,
    classify_domain,
    classify_task,
    estimate_complexity,
    external_analyze,
    parse_profile,
    prune_query,
)
from optiroute.errors import EmptyQuery

WORDS = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta")


def _text(n_words: int, seed: int = 1) -> str:
    rng = random.Random(seed)
    return " ".join(rng.choice(WORDS) for _ in range(n_words))


# -- prune ----------------------------------------------------------------

def test_prune_identity_under_threshold():
    text = _text(100)
    assert prune_query(text, PruneConfig()) == text


def test_prune_long_text_word_count():
    text = _text(10_000)
    out = prune_query(text, PruneConfig())
    words = out.split()
    assert len(words) == 64 + 64 + 64 + 2
    assert words.count(PRUNE_MARKER) == 2


def test_prune_deterministic():
    text = _text(10_000)
    assert prune_query(text, PruneConfig(seed=9)) == prune_query(text, PruneConfig(seed=9))
    assert prune_query(text, PruneConfig(seed=9)) != prune_query(text, PruneConfig(seed=10))


def test_prune_keeps_head_tail_and_order():
    words = [f"w{i:05d}" for i in range(2000)]
    out = prune_query(" ".join(words), PruneConfig()).split()
    assert out[:64] == words[:64]
    assert out[-64:] == words[-64:]
    middle = [w for w in out[64:-64] if w != PRUNE_MARKER]
    assert middle == sorted(middle)  # w-ids are sortable: order preserved
    assert all(w in set(words[64:-64]) for w in middle)


def test_prune_empty_text():
    assert prune_query("", PruneConfig()) == ""


def test_prune_config_budget_invariant():
    with pytest.raises(ValueError):
        PruneConfig(max_words=100, head_words=64, tail_words=64, middle_sample_words=64)


# -- task classification --------------------------------------------------

def test_classify_sentiment_example():
    assert classify_task("find the sentiment of the passage: lovely day") == "sentiment_analysis"


def test_classify_translation_example():
    assert classify_task("Translate this to German: Guten Tag") == "translation"


def test_classify_no_rule_fires():
    assert classify_task("asdf qwer zxcv") == "other"


@pytest.mark.parametrize("text,want", [
    ("Summarize the following notes: long meeting", "summarization"),
    ("please condense this for me", "summarization"),
    ("Implement a function that reverses a list", "code_generation"),
    ("debug the crash in this module", "code_generation"),
    ("Extract every date mentioned below: Jan", "extraction"),
    ("Classify the following request into groups: misc", "classification"),
    ("Answer this question about rivers?", "question_answering"),
    ("what is the tallest mountain", "question_answering"),
    ("Compose a short letter about spring", "text_generation"),
    ("write a story about a lighthouse", "text_generation"),
])
def test_classify_rule_table(text, want):
    assert classify_task(text) == want


def test_rule_order_first_match_wins():
    # "write" (text_generation) and "function" (code_generation) both
    # appear; code_generation sits earlier in the table.
    assert classify_task("write a function to parse dates") == "code_generation"
    # sentiment outranks question_answering's leading "what".
    assert classify_task("what is the sentiment here") == "sentiment_analysis"


def test_classify_empty_rejected():
    with pytest.raises(EmptyQuery):
        classify_task("   ")


# -- domain classification ------------------------------------------------

def test_domain_food_beverage_example():
    text = "the restaurant's espresso was bitter but the dessert saved dinner"
    assert classify_domain(text) == "food_beverage"


def test_domain_legal_example():
    assert classify_domain("plaintiff filed a motion for summary judgment") == "legal"


def test_domain_zero_hits_general():
    assert classify_domain("hello there") == "general"


def test_domain_tie_resolves_general():
    assert classify_domain("the patient signed the contract") == "general"


def test_domain_higher_count_wins():
    text = "the patient saw a physician about a diagnosis while reading a contract"
    assert classify_domain(text) == "healthcare"


# -- complexity -----------------------------------------------------------

def test_complexity_twelve_words_exact():
    text = "a calm pleasant visit with warm light kind staff and good seats"
    assert len(text.split()) == 12
    assert estimate_complexity(text) == pytest.approx(0.16, abs=1e-9)


def test_complexity_sixty_word_sarcastic_in_domain():
    filler = _text(50)
    text = f"oh sure the espresso at this restaurant was not amazing at all {filler}"
    assert len(text.split()) == 62  # W drives only the 0.25 * W/300 term
    # neg fires ("not"), rare fires (food_beverage terms), no multi-step
    value = estimate_complexity(text)
    w = len(text.split())
    want = 0.15 + 0.25 * min(1.0, w / 300.0) + 0.20 + 0.0 + 0.20
    assert value == pytest.approx(want, abs=1e-12)


def test_complexity_frozen_sixty_word_value():
    """W=60 with negation and a domain hit, no multi-step: 0.60."""
    filler = _text(50)
    text = f"oh sure the espresso at this restaurant was not amazing {filler}"
    assert len(text.split()) == 60
    assert estimate_complexity(text) == pytest.approx(0.60, abs=1e-9)


def test_complexity_floor_and_cap():
    assert estimate_complexity("hi") >= 0.15
    long_loaded = (
        "1. step one then do more " + _text(400)
        + ' not hardly "so great" after that the patient saw the physician'
    )
    assert estimate_complexity(long_loaded) == 1.0


def test_complexity_monotone_in_word_count():
    prev = 0.0
    for n in (5, 50, 150, 300, 600):
        value = estimate_complexity(_text(n))
        assert value >= prev
        prev = value


def test_complexity_each_marker_adds():
    base = _text(20)
    c0 = estimate_complexity(base)
    assert estimate_complexity(base + " not") >= c0 + 0.19
    assert estimate_complexity(base + " then") >= c0 + 0.19
    assert estimate_complexity(base + " patient") >= c0 + 0.19


def test_multistep_numbered_list():
    text = "please handle this\n1. first item\n2. second item"
    base = "please handle this first item second item"
    assert estimate_complexity(text) > estimate_complexity(base)


def test_complexity_empty_rejected():
    with pytest.raises(EmptyQuery):
        estimate_complexity("")


# -- analyze / profiles ---------------------------------------------------

def test_analyze_composes():
    text = "Find the sentiment of the passage: the espresso and dessert at the restaurant"
    profile = analyze(text)
    assert profile.task_type == "sentiment_analysis"
    assert profile.domain == "food_beverage"
    per_parts = estimate_complexity(text)
    assert profile.complexity == per_parts


def test_analyze_equals_analyze_of_pruned_short_text():
    text = "Summarize the following notes: " + _text(80)
    assert analyze(text) == analyze(prune_query(text, PruneConfig()))


def test_analyze_empty_rejected():
    with pytest.raises(EmptyQuery):
        analyze("")


def test_profile_invariants():
    with pytest.raises(ValueError):
        TaskProfile("sorcery", "general", 0.5)
    with pytest.raises(ValueError):
        TaskProfile("other", "midgard", 0.5)
    with pytest.raises(ValueError):
        TaskProfile("other", "general", 1.7)


def test_parse_profile_wire_record():
    profile = parse_profile({"task_type": "summarization", "domain": "legal", "complexity": 0.6})
    assert profile == TaskProfile("summarization", "legal", 0.6)
    with pytest.raises(ValueError):
        parse_profile({"task_type": "summarization", "domain": "legal"})


# -- external analyzer ----------------------------------------------------

def test_external_analyze_connection_failure_falls_back():
    text = "Summarize the following notes: quiet morning meeting"
    profile, tag = external_analyze("http://127.0.0.1:1/analyze", text, timeout=0.2)
    assert tag == "fallback-heuristic"
    assert profile == analyze(text)


def test_external_analyze_success(monkeypatch):
    class FakeResponse:
        status_code = 200

        def raise_for_status(self):
            pass

        def json(self):
            return {"task_type": "summarization", "domain": "legal", "complexity": 0.6}

    import requests

    monkeypatch.setattr(requests, "post", lambda *a, **k: FakeResponse())
    profile, tag = external_analyze("http://example.invalid/analyze", "anything here")
    assert tag == "external"
    assert profile == TaskProfile("summarization", "legal", 0.6)


def test_external_analyze_invariant_violation_falls_back(monkeypatch):
    class FakeResponse:
        status_code = 200

        def raise_for_status(self):
            pass

        def json(self):
            return {"task_type": "summarization", "domain": "legal", "complexity": 1.7}

    import requests

    monkeypatch.setattr(requests, "post", lambda *a, **k: FakeResponse())
    text = "Summarize the following notes: quiet morning"
    profile, tag = external_analyze("http://example.invalid/analyze", text)
    assert tag == "fallback-heuristic"
    assert profile == analyze(text)


# -- documentation sync ---------------------------------------------------

def test_docs_mirror_rule_tables():
    from pathlib import Path

    doc_path = Path(__file__).resolve().parents[1] / "docs" / "analyzer.md"
    doc = doc_path.read_text(encoding="utf-8")
    assert ANALYZER_VERSION in doc
    for name, pattern in TASK_RULES:
        assert name in doc
        assert pattern.replace("|", "\\|") in doc or pattern in doc, pattern
    for domain, terms in DOMAIN_LEXICONS.items():
        for term in terms:
            assert term in doc, (domain, term)
    formula = "clamp(0.15 + 0.25*min(1, W/300) + 0.20*neg + 0.20*multi + 0.20*rare, 0, 1)"
    assert formula in doc
    for pattern in NEGATION_PATTERNS + MULTISTEP_PATTERNS:
        assert pattern in doc, pattern
