"""Lightweight query analysis: pruning, task typing, domain, complexity.

Everything here is deterministic and dependency-free so results are
bit-reproducible. The classifiers are rule tables (documented in
docs/analyzer.md); `external_analyze` lets a real analyzer service be
plugged in later, falling back to the built-in rules on any failure.

Complexity is scored by a fixed formula (stated verbatim, see
`estimate_complexity`); its constants are frozen under ANALYZER_VERSION
and changing them requires bumping that string.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass

from .errors import EmptyQuery

log = logging.getLogger(__name__)

ANALYZER_VERSION = "heuristic-1"

TASK_TYPES = (
    "sentiment_analysis",
    "summarization",
    "translation",
    "question_answering",
    "code_generation",
    "classification",
    "extraction",
    "text_generation",
    "other",
)

DOMAINS = (
    "general",
    "healthcare",
    "finance",
    "legal",
    "food_beverage",
    "technology",
    "other",
)

# Ellipsis token inserted where pruning removed words.
PRUNE_MARKER = "[...]"

# Ordered task-type rules; first match wins, no match means "other".
# Order is significant: specific verbs (translate, summarize, extract)
# outrank the generic write/compose bucket, and code vocabulary outranks
# plain generation so "write a function" routes to code.
TASK_RULES: tuple[tuple[str, str], ...] = (
    ("sentiment_analysis", r"\bsentiment\b|\bpositive or negative\b|\btone of\b"),
    ("summarization", r"\bsummar|\btl;?dr\b|\bcondense\b|\bkey points\b"),
    ("translation", r"\btranslat|\binto (german|french|spanish|japanese|english)\b"),
    ("code_generation", r"\bcode\b|\bfunction\b|\bscript\b|\bpython\b|\bregex\b|\bsql\b|\bdebug\b|\bimplement\b"),
    ("extraction", r"\bextract\b|\bpull out\b|\blist every\b|\blist all\b"),
    ("classification", r"\bclassify\b|\bcategor|\bwhich label\b|\blabel the\b"),
    ("question_answering", r"\banswer\b|^\s*(who|what|when|where|why|which)\b"),
    ("text_generation", r"\bwrite\b|\bcompose\b|\bgenerate\b|\bdraft\b|\bstory\b|\bpoem\b"),
)

_COMPILED_TASK_RULES = tuple(
    (name, re.compile(pattern, re.IGNORECASE)) for name, pattern in TASK_RULES
)

# Domain lexicons: distinct terms hit, highest count wins, ties or zero
# fall back to "general". "other" is reachable only through catalog tags
# or an external analyzer, never from these lexicons.
DOMAIN_LEXICONS: dict[str, tuple[str, ...]] = {
    "healthcare": (
        "patient", "diagnosis", "clinical", "symptom", "prescription",
        "dosage", "medical", "hospital", "physician", "disease", "treatment",
    ),
    "finance": (
        "loan", "invoice", "portfolio", "dividend", "equity", "mortgage",
        "revenue", "ledger", "audit", "shares", "currency", "budget",
    ),
    "legal": (
        "plaintiff", "defendant", "motion", "statute", "contract", "clause",
        "liability", "court", "judgment", "attorney", "tort", "lawsuit",
    ),
    "food_beverage": (
        "restaurant", "menu", "espresso", "dessert", "flavor", "recipe",
        "sauce", "dish", "wine", "chef", "appetizer", "dining",
    ),
    "technology": (
        "server", "database", "software", "api", "cpu", "compiler",
        "kernel", "network", "cloud", "encryption", "browser", "firmware",
    ),
}

_COMPILED_LEXICONS = {
    domain: tuple(re.compile(rf"\b{re.escape(term)}\b", re.IGNORECASE) for term in terms)
    for domain, terms in DOMAIN_LEXICONS.items()
}

# Negation / sarcasm markers, incl. a short scare-quoted span.
NEGATION_PATTERNS = (r"\bnot\b", r"\bhardly\b", r"\byeah right\b", r"\bas if\b", r'"[^"]{1,30}"')
# Multi-step markers: sequencing words and line-leading numbered items.
MULTISTEP_PATTERNS = (r"\bthen\b", r"\bafter that\b", r"\bstep\b", r"(?m)^\s*\d{1,2}[.)]\s")

_NEGATION_RE = tuple(re.compile(p, re.IGNORECASE) for p in NEGATION_PATTERNS)
_MULTISTEP_RE = tuple(re.compile(p, re.IGNORECASE) for p in MULTISTEP_PATTERNS)


@dataclass(frozen=True)
class TaskProfile:
    """What the analyzer inferred about one query."""

    task_type: str
    domain: str
    complexity: float

    def __post_init__(self) -> None:
        if self.task_type not in TASK_TYPES:
            raise ValueError(f"unknown task_type {self.task_type!r}")
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if not 0.0 <= self.complexity <= 1.0:
            raise ValueError(f"complexity out of range [0, 1]: {self.complexity}")

    def as_dict(self) -> dict[str, object]:
        return {
            "task_type": self.task_type,
            "domain": self.domain,
            "complexity": self.complexity,
        }


@dataclass(frozen=True)
class PruneConfig:
    max_words: int = 512
    head_words: int = 64
    tail_words: int = 64
    middle_sample_words: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("max_words", "head_words", "tail_words", "middle_sample_words"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive int")
        budget = self.head_words + self.tail_words + self.middle_sample_words
        if budget > self.max_words:
            raise ValueError(
                f"head + tail + middle_sample ({budget}) exceeds max_words ({self.max_words})"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


def prune_query(text: str, cfg: PruneConfig | None = None) -> str:
    """Shorten an over-long query while keeping its shape.

    Texts at or under max_words pass through byte-identical. Longer texts
    keep the leading head_words and trailing tail_words, plus a seeded
    uniform sample of middle_sample_words words from the region between,
    in original order, with a marker token at each cut. Deterministic for
    a fixed (text, cfg).
    """
    cfg = cfg or PruneConfig()
    words = text.split()
    if len(words) <= cfg.max_words:
        return text
    head = words[: cfg.head_words]
    tail = words[len(words) - cfg.tail_words:]
    middle = words[cfg.head_words: len(words) - cfg.tail_words]
    rng = random.Random(cfg.seed)
    picked = sorted(rng.sample(range(len(middle)), cfg.middle_sample_words))
    sampled = [middle[i] for i in picked]
    return " ".join(head + [PRUNE_MARKER] + sampled + [PRUNE_MARKER] + tail)


def _require_text(text: str) -> str:
    if not text or not text.strip():
        raise EmptyQuery("query text is empty")
    return text


def classify_task(text: str) -> str:
    """First matching rule in TASK_RULES order; 'other' when none fires."""
    _require_text(text)
    for name, rule in _COMPILED_TASK_RULES:
        if rule.search(text):
            return name
    return "other"


def _domain_hits(text: str) -> dict[str, int]:
    return {
        domain: sum(1 for rule in rules if rule.search(text))
        for domain, rules in _COMPILED_LEXICONS.items()
    }


def classify_domain(text: str) -> str:
    """Domain whose lexicon scores the most distinct hits; ties and zero
    hits resolve to 'general'."""
    _require_text(text)
    hits = _domain_hits(text)
    best = max(hits.values())
    if best == 0:
        return "general"
    winners = [d for d, n in hits.items() if n == best]
    return winners[0] if len(winners) == 1 else "general"


def estimate_complexity(text: str) -> float:
    """Deterministic complexity score in [0, 1].

    Formula (frozen under ANALYZER_VERSION):

        clamp(0.15 + 0.25*min(1, W/300) + 0.20*neg + 0.20*multi + 0.20*rare, 0, 1)

    where W is the whitespace-delimited word count, neg is 1 if any
    negation/sarcasm marker matches, multi is 1 if any multi-step marker
    matches, and rare is 1 if any non-general domain lexicon scored a hit.
    """
    _require_text(text)
    w = len(text.split())
    neg = 1.0 if any(r.search(text) for r in _NEGATION_RE) else 0.0
    multi = 1.0 if any(r.search(text) for r in _MULTISTEP_RE) else 0.0
    rare = 1.0 if any(n > 0 for n in _domain_hits(text).values()) else 0.0
    score = 0.15 + 0.25 * min(1.0, w / 300.0) + 0.20 * neg + 0.20 * multi + 0.20 * rare
    return min(1.0, max(0.0, score))


def analyze(text: str, cfg: PruneConfig | None = None) -> TaskProfile:
    """Prune, then classify task type, domain, and complexity."""
    _require_text(text)
    pruned = prune_query(text, cfg)
    return TaskProfile(
        task_type=classify_task(pruned),
        domain=classify_domain(pruned),
        complexity=estimate_complexity(pruned),
    )


def parse_profile(obj: object) -> TaskProfile:
    """Validate an analyzer wire record {"task_type", "domain", "complexity"}."""
    if not isinstance(obj, dict):
        raise ValueError("analyzer record must be an object")
    task_type = obj.get("task_type")
    domain = obj.get("domain")
    complexity = obj.get("complexity")
    if not isinstance(task_type, str) or not isinstance(domain, str):
        raise ValueError("task_type and domain must be strings")
    if isinstance(complexity, bool) or not isinstance(complexity, (int, float)):
        raise ValueError("complexity must be a number")
    return TaskProfile(task_type=task_type, domain=domain, complexity=float(complexity))


def external_analyze(
    endpoint: str,
    text: str,
    timeout: float = 0.5,
    cfg: PruneConfig | None = None,
) -> tuple[TaskProfile, str]:
    """Ask an external analyzer service; fall back to the built-in rules.

    POSTs {"query": text} and validates the response against TaskProfile
    invariants. Any failure (connection, timeout, bad payload, range
    violation) is logged and answered with the heuristic result tagged
    "fallback-heuristic"; success is tagged "external".
    """
    _require_text(text)
    if timeout <= 0:
        raise ValueError("timeout must be > 0")
    import requests

    try:
        resp = requests.post(endpoint, json={"query": text}, timeout=timeout)
        resp.raise_for_status()
        return parse_profile(resp.json()), "external"
    except Exception as exc:
        log.warning("external analyzer failed (%s); using heuristic", exc)
        return analyze(text, cfg), "fallback-heuristic"


def heuristic_analyzer(cfg: PruneConfig | None = None):
    """Analyzer callable for the router: text -> (TaskProfile, tag)."""
    def run(text: str) -> tuple[TaskProfile, str]:
        return analyze(text, cfg), "heuristic"
    return run


def external_analyzer(endpoint: str, timeout: float = 0.5, cfg: PruneConfig | None = None):
    """Analyzer callable backed by an external service with fallback."""
    def run(text: str) -> tuple[TaskProfile, str]:
        return external_analyze(endpoint, text, timeout=timeout, cfg=cfg)
    return run
