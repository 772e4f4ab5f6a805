"""The routing engine: task vector, cosine recall, filters, scoring, fallback.

Pipeline per query: analyze -> build the 9-dim task vector (8 explicit
preference weights in model-vector dimension order plus inferred
complexity) -> cosine top-k against the catalog snapshot -> task-type and
domain filters -> weighted score with feedback bias -> argmax, ties by
lowest raw cost then ascending id.

Cosine is the recall stage, the weighted score is the refinement stage.
Complexity steers recall (dimension 9) but is excluded from the weighted
score, which uses the 8 explicit weights only.

When no candidate survives the filters, route relaxes in order: double k
(bounded), drop the domain filter, then consider generalist models only.
min_reliability stays enforced at every level.
"""

from __future__ import annotations

import math
import random
import uuid
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .analyzer import TaskProfile, heuristic_analyzer
from .errors import EmptyBatch, EmptyCatalog, EmptyQuery, NoModelAvailable, ZeroPreferences, ZeroVector
from .feedback import ClusterKey, DecisionStore, cluster_of
from .registry import NormalizedCatalog, top_k

PREF_FIELDS = (
    "accuracy",
    "latency",
    "cost",
    "helpfulness",
    "honesty",
    "harmlessness",
    "steerability",
    "creativity",
)

FALLBACK_LEVELS = ("none", "expanded_k", "relaxed_domain", "generalist")

# The only supported tie-break policy: lowest raw cost, then ascending id.
TIE_BREAK = "cost_then_id"

AnalyzerFn = Callable[[str], tuple[TaskProfile, str]]
BiasFn = Callable[[str, ClusterKey], float]


@dataclass(frozen=True)
class PreferenceVector:
    """Explicit [0,1] priority weights; 0 = irrelevant, 1 = top priority."""

    accuracy: float = 0.0
    latency: float = 0.0
    cost: float = 0.0
    helpfulness: float = 0.0
    honesty: float = 0.0
    harmlessness: float = 0.0
    steerability: float = 0.0
    creativity: float = 0.0

    def __post_init__(self) -> None:
        for name in PREF_FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"preference {name} must be a number")
            if not 0.0 <= float(v) <= 1.0:
                raise ValueError(f"preference {name} out of range [0, 1]: {v}")

    def weights(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PREF_FIELDS], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in PREF_FIELDS}

    @classmethod
    def from_dict(cls, obj: dict[str, object]) -> "PreferenceVector":
        unknown = set(obj) - set(PREF_FIELDS)
        if unknown:
            raise ValueError(f"unknown preference field(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in obj.items()})  # type: ignore[arg-type]


# Named presets. The profile names are fixed vocabulary; the numbers are
# this implementation's defaults.
PROFILES: dict[str, PreferenceVector] = {
    "cost-effective": PreferenceVector(
        accuracy=0.4, latency=0.6, cost=1.0,
        helpfulness=0.5, honesty=0.5, harmlessness=0.5,
        steerability=0.3, creativity=0.3,
    ),
    "ethically-aligned": PreferenceVector(
        accuracy=0.7, latency=0.4, cost=0.4,
        helpfulness=1.0, honesty=1.0, harmlessness=1.0,
        steerability=0.4, creativity=0.4,
    ),
    "latency-first": PreferenceVector(
        accuracy=0.5, latency=1.0, cost=0.6,
        helpfulness=0.4, honesty=0.4, harmlessness=0.4,
        steerability=0.4, creativity=0.4,
    ),
    "balanced": PreferenceVector(
        accuracy=0.5, latency=0.5, cost=0.5,
        helpfulness=0.5, honesty=0.5, harmlessness=0.5,
        steerability=0.5, creativity=0.5,
    ),
}


@dataclass(frozen=True)
class RouterConfig:
    k: int = 10
    min_reliability: float = 0.0
    tie_break: str = TIE_BREAK
    fallback_max_doublings: int = 3

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.min_reliability <= 1.0:
            raise ValueError(f"min_reliability out of range [0, 1]: {self.min_reliability}")
        if self.tie_break != TIE_BREAK:
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")
        if self.fallback_max_doublings < 0:
            raise ValueError("fallback_max_doublings must be >= 0")


class Candidate(NamedTuple):
    model_id: str
    similarity: float
    score: float


@dataclass(frozen=True)
class RoutingDecision:
    decision_id: str
    selected: str
    score: float
    similarity: float
    candidates: tuple[Candidate, ...]
    fallback_level: str
    profile: TaskProfile
    prefs: PreferenceVector
    catalog_version: int
    analyzer_tag: str
    tags: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, object]:
        """The wire form shared by the HTTP service and the CLI."""
        return {
            "decision_id": self.decision_id,
            "selected": self.selected,
            "score": self.score,
            "similarity": self.similarity,
            "candidates": [
                {"model_id": c.model_id, "similarity": c.similarity, "score": c.score}
                for c in self.candidates
            ],
            "fallback_level": self.fallback_level,
            "profile": self.profile.as_dict(),
            "prefs": self.prefs.as_dict(),
            "catalog_version": self.catalog_version,
            "analyzer_tag": self.analyzer_tag,
            "tags": list(self.tags),
        }


@dataclass(frozen=True)
class BatchDecision:
    selected: str
    sample_indices: tuple[int, ...]
    decisions: tuple[RoutingDecision, ...]
    n_queries: int
    selection_mode: str  # "all_pass_pool" or "modal"

    def to_dict(self) -> dict[str, object]:
        return {
            "selected": self.selected,
            "sample_indices": list(self.sample_indices),
            "sample_size": len(self.sample_indices),
            "n_queries": self.n_queries,
            "selection_mode": self.selection_mode,
            "decisions": [d.to_dict() for d in self.decisions],
        }


def build_task_vector(prefs: PreferenceVector, profile: TaskProfile) -> np.ndarray:
    """Place the 8 weights in model-vector dimension order + complexity.

    The latency weight lands on the speed dimension and the cost weight on
    cost_efficiency (a high weight asks for a high normalized score there).
    All nine components zero would make cosine undefined, hence
    ZeroPreferences; callers wanting a default substitute the balanced
    profile and tag the decision "defaulted-prefs".
    """
    vec = np.empty(9, dtype=np.float64)
    vec[:8] = prefs.weights()
    vec[8] = profile.complexity
    if not np.any(vec):
        raise ZeroPreferences(
            "all preference weights and complexity are zero; task vector undefined"
        )
    return vec


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for zero-magnitude vectors")
    return float(np.dot(a, b)) / (na * nb)


def _passes(
    card, profile: TaskProfile, cfg: RouterConfig,
    *, check_task: bool = True, check_domain: bool = True,
) -> bool:
    if card.metrics.reliability < cfg.min_reliability:
        return False
    if check_task and profile.task_type not in card.task_types:
        return False
    if check_domain and profile.domain != "general" and profile.domain not in card.domains:
        return False
    return True


def filter_candidates(
    candidates: list[tuple[str, float]],
    profile: TaskProfile,
    catalog: NormalizedCatalog,
    cfg: RouterConfig,
) -> list[tuple[str, float]]:
    """Keep candidates matching task type, domain (general skips it), and
    the reliability floor; order preserved."""
    out = []
    for model_id, sim in candidates:
        card, _ = catalog.get(model_id)
        if _passes(card, profile, cfg):
            out.append((model_id, sim))
    return out


def score(
    model: tuple[object, np.ndarray], prefs: PreferenceVector, bias: float = 0.0
) -> float:
    """Weighted mean of the first 8 vector dims + bias, clamped to [0, 1].

    All-zero weights degrade to the uniform mean (see build_task_vector's
    error note; callers tag such decisions).
    """
    _, vec = model
    w = prefs.weights()
    total = float(w.sum())
    if total == 0.0:
        base = float(np.mean(vec[:8]))
    else:
        base = float(np.dot(w, vec[:8]) / total)
    return min(1.0, max(0.0, base + bias))


def _score_survivors(
    survivors: list[tuple[str, float]],
    catalog: NormalizedCatalog,
    prefs: PreferenceVector,
    bias_source: BiasFn | None,
    cluster: ClusterKey,
) -> list[Candidate]:
    idx = [catalog.index_of(mid) for mid, _ in survivors]
    base = _kernels.weighted_scores(catalog.vectors[idx, :], prefs.weights())
    out = []
    for (mid, sim), b in zip(survivors, base):
        extra = bias_source(mid, cluster) if bias_source else 0.0
        out.append(Candidate(mid, float(sim), min(1.0, max(0.0, float(b) + extra))))
    return out


def _raw_cost(catalog: NormalizedCatalog, model_id: str) -> float:
    card, _ = catalog.get(model_id)
    return card.metrics.cost_per_1k_tokens_usd


def _recall(
    catalog: NormalizedCatalog,
    tvec: np.ndarray,
    profile: TaskProfile,
    cfg: RouterConfig,
) -> tuple[list[tuple[str, float]], str]:
    """kNN + filters with the fallback cascade; survivors and the level."""
    n = len(catalog)
    k_eff = cfg.k
    doublings = 0
    while True:
        cands = top_k(catalog, tvec, min(k_eff, n))
        surv = filter_candidates(cands, profile, catalog, cfg)
        if surv:
            return surv, ("none" if doublings == 0 else "expanded_k")
        if k_eff >= n or doublings >= cfg.fallback_max_doublings:
            break
        k_eff *= 2
        doublings += 1

    full = top_k(catalog, tvec, n)
    surv = [
        (mid, sim) for mid, sim in full
        if _passes(catalog.get(mid)[0], profile, cfg, check_domain=False)
    ]
    if surv:
        return surv, "relaxed_domain"

    surv = [
        (mid, sim) for mid, sim in full
        if catalog.get(mid)[0].generalist
        and _passes(catalog.get(mid)[0], profile, cfg, check_task=False, check_domain=False)
    ]
    if surv:
        return surv, "generalist"
    raise NoModelAvailable(
        f"no model passes filters for task_type={profile.task_type} "
        f"domain={profile.domain} at min_reliability={cfg.min_reliability}"
    )


def route(
    query: str,
    prefs: PreferenceVector,
    catalog: NormalizedCatalog,
    cfg: RouterConfig | None = None,
    bias_source: BiasFn | None = None,
    analyzer: AnalyzerFn | None = None,
    store: DecisionStore | None = None,
    tags: tuple[str, ...] = (),
) -> RoutingDecision:
    """Select one model for one query; see the module docstring for the
    pipeline. Identical inputs (query, prefs, catalog version, feedback
    state) give identical decisions apart from the fresh decision_id.
    """
    cfg = cfg or RouterConfig()
    if len(catalog) == 0:
        raise EmptyCatalog("route on an empty catalog")
    if not query or not query.strip():
        raise EmptyQuery("query text is empty")
    analyzer = analyzer or heuristic_analyzer()
    profile, analyzer_tag = analyzer(query)
    tvec = build_task_vector(prefs, profile)
    cluster = cluster_of(profile)

    survivors, level = _recall(catalog, tvec, profile, cfg)
    scored = _score_survivors(survivors, catalog, prefs, bias_source, cluster)
    ranked = sorted(
        scored, key=lambda c: (-c.score, _raw_cost(catalog, c.model_id), c.model_id)
    )
    best = ranked[0]

    all_tags = list(tags)
    if float(prefs.weights().sum()) == 0.0 and "defaulted-prefs" not in all_tags:
        all_tags.append("defaulted-prefs")

    decision = RoutingDecision(
        decision_id=uuid.uuid4().hex,
        selected=best.model_id,
        score=best.score,
        similarity=best.similarity,
        candidates=tuple(ranked),
        fallback_level=level,
        profile=profile,
        prefs=prefs,
        catalog_version=catalog.version,
        analyzer_tag=analyzer_tag,
        tags=tuple(all_tags),
    )
    if store is not None:
        store.put(decision.decision_id, decision.selected, cluster)
    return decision


def sample_indices(n_queries: int, sample_rate: float, seed: int) -> list[int]:
    """clamp(ceil(rate * N), 1, N) indices, seeded, without replacement."""
    if n_queries < 1:
        raise EmptyBatch("batch contains no queries")
    if not 0.0 < sample_rate <= 1.0:
        raise ValueError(f"sample_rate must be in (0, 1], got {sample_rate}")
    size = max(1, min(n_queries, math.ceil(sample_rate * n_queries)))
    rng = random.Random(seed)
    return sorted(rng.sample(range(n_queries), size))


def route_batch(
    queries: list[str],
    prefs: PreferenceVector,
    catalog: NormalizedCatalog,
    cfg: RouterConfig | None = None,
    bias_source: BiasFn | None = None,
    analyzer: AnalyzerFn | None = None,
    store: DecisionStore | None = None,
    sample_rate: float = 0.02,
    seed: int = 0,
) -> BatchDecision:
    """Route a whole batch through one model chosen from a sampled subset.

    Samples clamp(ceil(rate*N), 1, N) queries, routes each, then picks the
    model with the highest mean score among models passing the filters for
    every sampled profile. If no model passes them all, falls back to the
    most frequent per-sample selection. Ties break by lowest raw cost then
    ascending id. Deterministic for a fixed seed.
    """
    cfg = cfg or RouterConfig()
    if not queries:
        raise EmptyBatch("batch contains no queries")
    indices = sample_indices(len(queries), sample_rate, seed)
    decisions = [
        route(
            queries[i], prefs, catalog, cfg,
            bias_source=bias_source, analyzer=analyzer, store=store,
        )
        for i in indices
    ]

    pool = [
        card.id
        for card in catalog.cards
        if all(_passes(card, d.profile, cfg) for d in decisions)
    ]
    if pool:
        means: dict[str, float] = {}
        for mid in pool:
            vec = catalog.vectors[catalog.index_of(mid)]
            total = []
            for d in decisions:
                extra = bias_source(mid, cluster_of(d.profile)) if bias_source else 0.0
                total.append(score((None, vec), prefs, extra))
            means[mid] = sum(total) / len(total)
        selected = min(
            pool, key=lambda mid: (-means[mid], _raw_cost(catalog, mid), mid)
        )
        mode = "all_pass_pool"
    else:
        counts: dict[str, int] = {}
        for d in decisions:
            counts[d.selected] = counts.get(d.selected, 0) + 1
        selected = min(
            counts, key=lambda mid: (-counts[mid], _raw_cost(catalog, mid), mid)
        )
        mode = "modal"

    return BatchDecision(
        selected=selected,
        sample_indices=tuple(indices),
        decisions=tuple(decisions),
        n_queries=len(queries),
        selection_mode=mode,
    )
