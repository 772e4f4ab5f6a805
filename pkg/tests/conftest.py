"""Shared fixtures, catalog builders, and independent pure-Python oracles.

The oracles deliberately avoid the package's numpy/numba kernels: cosine
and weighted scores are recomputed with math.fsum so kernel results are
checked against an implementation that shares no code with them. The
zero-magnitude-row convention (similarity 0.0) is mirrored here because
both sides must agree on it by contract.
"""

from __future__ import annotations

import json
import math
import random

import pytest

from optiroute import _kernels
from optiroute.analyzer import TASK_TYPES
from optiroute.registry import ModelCard, NormalizedCatalog, RawMetrics, normalize_catalog


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile/warm the kernels so timed sections never pay JIT cost."""
    _kernels.warmup()
    return _kernels.backend_name()


def make_card(
    model_id: str,
    *,
    task_types=("other",),
    domains=("general",),
    generalist=False,
    accuracy=0.5,
    latency_ms=100.0,
    cost=1.0,
    helpfulness=0.5,
    honesty=0.5,
    harmlessness=0.5,
    steerability=0.5,
    creativity=0.5,
    reliability=1.0,
    complexity_capability=0.5,
    params_b=1.0,
    provider="test",
) -> ModelCard:
    if generalist:
        task_types = TASK_TYPES
    return ModelCard(
        id=model_id,
        name=model_id,
        provider=provider,
        params_b=params_b,
        task_types=frozenset(task_types),
        domains=frozenset(domains),
        generalist=generalist,
        metrics=RawMetrics(
            accuracy=accuracy,
            latency_ms=latency_ms,
            cost_per_1k_tokens_usd=cost,
            helpfulness=helpfulness,
            honesty=honesty,
            harmlessness=harmlessness,
            steerability=steerability,
            creativity=creativity,
            reliability=reliability,
            complexity_capability=complexity_capability,
        ),
    )


def random_cards(
    rng: random.Random,
    n: int,
    *,
    force_task: str | None = None,
    dup_prob: float = 0.2,
    const_accuracy: bool = False,
    generalist_last: bool = False,
) -> list[ModelCard]:
    """Random catalog; optionally seed metric ties and a constant column.

    With force_task, every card carries that task type so a query of that
    type always has level-0 survivors. dup_prob occasionally copies an
    earlier card's metrics under a new id, which exercises tie-breaking.
    """
    cards: list[ModelCard] = []
    for i in range(n):
        model_id = f"m{i:03d}"
        if cards and rng.random() < dup_prob:
            src = rng.choice(cards)
            cards.append(
                ModelCard(
                    id=model_id, name=model_id, provider="test",
                    params_b=src.params_b, task_types=src.task_types,
                    domains=src.domains, generalist=src.generalist,
                    metrics=src.metrics,
                )
            )
            continue
        task_types = set(rng.sample(TASK_TYPES, rng.randint(1, 4)))
        if force_task:
            task_types.add(force_task)
        domains = set(rng.sample(
            ("general", "healthcare", "finance", "legal", "food_beverage", "technology"),
            rng.randint(1, 3),
        ))
        generalist = generalist_last and i == n - 1
        cards.append(
            make_card(
                model_id,
                task_types=tuple(task_types),
                domains=tuple(domains),
                generalist=generalist,
                accuracy=0.7 if const_accuracy else rng.uniform(0.0, 1.0),
                latency_ms=rng.uniform(10.0, 2000.0),
                cost=rng.uniform(0.01, 10.0),
                helpfulness=rng.uniform(0.0, 1.0),
                honesty=rng.uniform(0.0, 1.0),
                harmlessness=rng.uniform(0.0, 1.0),
                steerability=rng.uniform(0.0, 1.0),
                creativity=rng.uniform(0.0, 1.0),
                reliability=rng.uniform(0.5, 1.0),
                complexity_capability=rng.uniform(0.0, 1.0),
            )
        )
    return cards


def catalog_of(cards: list[ModelCard], version: int = 1) -> NormalizedCatalog:
    return normalize_catalog(cards, version=version)


def cards_to_json(cards: list[ModelCard]) -> dict:
    """Render cards back into the catalog file format."""
    return {
        "schema_version": 1,
        "models": [
            {
                "id": c.id,
                "name": c.name,
                "provider": c.provider,
                "params_b": c.params_b,
                "task_types": sorted(c.task_types),
                "domains": sorted(c.domains),
                "generalist": c.generalist,
                "metrics": c.metrics.as_dict(),
            }
            for c in cards
        ],
    }


def write_catalog(path, cards: list[ModelCard]) -> str:
    path.write_text(json.dumps(cards_to_json(cards), indent=2), encoding="utf-8")
    return str(path)


# -- independent oracles --------------------------------------------------


def minmax_oracle(columns: list[list[float]], invert: list[bool]) -> list[list[float]]:
    """Per-column min-max with inversion; constant column -> 0.5."""
    n = len(columns[0])
    out = [[0.0] * len(columns) for _ in range(n)]
    for j, col in enumerate(columns):
        lo, hi = min(col), max(col)
        for i, x in enumerate(col):
            if hi == lo:
                out[i][j] = 0.5
            elif invert[j]:
                out[i][j] = (hi - x) / (hi - lo)
            else:
                out[i][j] = (x - lo) / (hi - lo)
    return out


def cosine_oracle(row: list[float], query: list[float]) -> float:
    rn = math.sqrt(math.fsum(x * x for x in row))
    qn = math.sqrt(math.fsum(q * q for q in query))
    if rn == 0.0:
        return 0.0
    return math.fsum(a * b for a, b in zip(row, query)) / (rn * qn)


def topk_oracle(
    ids: list[str], vectors: list[list[float]], query: list[float], k: int
) -> list[str]:
    sims = [cosine_oracle(row, query) for row in vectors]
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
    return [ids[i] for i in order[: min(k, len(ids))]]


def score_oracle(vec: list[float], weights: list[float], bias: float = 0.0) -> float:
    total = math.fsum(weights)
    if total == 0.0:
        base = math.fsum(vec[:8]) / 8.0
    else:
        base = math.fsum(w * v for w, v in zip(weights, vec[:8])) / total
    return min(1.0, max(0.0, base + bias))


def passes_oracle(card: ModelCard, profile, min_reliability: float = 0.0) -> bool:
    if card.metrics.reliability < min_reliability:
        return False
    if profile.task_type not in card.task_types:
        return False
    if profile.domain != "general" and profile.domain not in card.domains:
        return False
    return True


def route_oracle(
    catalog: NormalizedCatalog, profile, weights: list[float],
    min_reliability: float = 0.0,
) -> str:
    """Exhaustive argmax-score over every filter-passing model, zero bias."""
    best = None
    for i, card in enumerate(catalog.cards):
        if not passes_oracle(card, profile, min_reliability):
            continue
        s = score_oracle([float(x) for x in catalog.vectors[i]], weights)
        key = (-s, card.metrics.cost_per_1k_tokens_usd, card.id)
        if best is None or key < best[0]:
            best = (key, card.id)
    assert best is not None, "oracle found no filter-passing model"
    return best[1]
