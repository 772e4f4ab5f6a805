"""Model catalog: loading, validation, normalization, snapshots, cosine top-k.

The catalog is a JSON document (see schemas/catalog.schema.json). Loading
is strict: unknown fields, duplicate ids, and out-of-range metrics are
rejected with messages that name the offending model. Normalization maps
every metric into [0, 1] column-wise over the catalog so models compare
like-for-like; latency and cost are direction-inverted so that 1.0 always
means "better". The result is published as an immutable snapshot with a
monotonically increasing version; reloads swap the snapshot atomically
while in-flight lookups keep using the one they started with.
"""

from __future__ import annotations

import io
import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .analyzer import DOMAINS, TASK_TYPES
from .errors import EmptyCatalog, MalformedCatalog, SchemaViolation, ZeroVector

# Dimension order of every model/task vector. Fixed; length 9.
VECTOR_DIMENSIONS = (
    "accuracy",
    "speed",
    "cost_efficiency",
    "helpfulness",
    "honesty",
    "harmlessness",
    "steerability",
    "creativity",
    "complexity_capability",
)

# Raw metric feeding each vector dimension, and whether lower raw is better.
_DIMENSION_SOURCES = (
    ("accuracy", False),
    ("latency_ms", True),
    ("cost_per_1k_tokens_usd", True),
    ("helpfulness", False),
    ("honesty", False),
    ("harmlessness", False),
    ("steerability", False),
    ("creativity", False),
    ("complexity_capability", False),
)

_SCORE01_METRICS = (
    "accuracy",
    "helpfulness",
    "honesty",
    "harmlessness",
    "steerability",
    "creativity",
    "reliability",
    "complexity_capability",
)

_ALL_METRICS = _SCORE01_METRICS + ("latency_ms", "cost_per_1k_tokens_usd")

SCHEMA_VERSION = 1

_MODEL_FIELDS = {
    "id", "name", "provider", "params_b", "task_types", "domains",
    "generalist", "metrics", "annotations",
}
_REQUIRED_MODEL_FIELDS = _MODEL_FIELDS - {"annotations"}


@dataclass(frozen=True)
class RawMetrics:
    """Per-model evaluation metrics as they appear in the catalog file."""

    accuracy: float
    latency_ms: float
    cost_per_1k_tokens_usd: float
    helpfulness: float
    honesty: float
    harmlessness: float
    steerability: float
    creativity: float
    reliability: float
    complexity_capability: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _ALL_METRICS}


@dataclass(frozen=True)
class ModelCard:
    """One catalog entry: identity, capability tags, raw metrics."""

    id: str
    name: str
    provider: str
    params_b: float
    task_types: frozenset[str]
    domains: frozenset[str]
    generalist: bool
    metrics: RawMetrics
    annotations: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class NormalizedCatalog:
    """Immutable snapshot: cards plus their normalized 9-dim vectors.

    `vectors` is a read-only (N, 9) float64 matrix in VECTOR_DIMENSIONS
    order, row i belonging to cards[i]. `metric_bounds` records the raw
    (min, max) observed per metric when normalizing.
    """

    cards: tuple[ModelCard, ...]
    vectors: np.ndarray
    metric_bounds: dict[str, tuple[float, float]]
    version: int

    def __len__(self) -> int:
        return len(self.cards)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(card.id for card in self.cards)

    def get(self, model_id: str) -> tuple[ModelCard, np.ndarray]:
        for i, card in enumerate(self.cards):
            if card.id == model_id:
                return card, self.vectors[i]
        raise KeyError(model_id)

    def index_of(self, model_id: str) -> int:
        for i, card in enumerate(self.cards):
            if card.id == model_id:
                return i
        raise KeyError(model_id)


def _fail(model_id: str, message: str) -> SchemaViolation:
    return SchemaViolation(f'model "{model_id}": {message}')


def _check_number(model_id: str, name: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(model_id, f"metric {name} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise _fail(model_id, f"metric {name} must be finite, got {value!r}")
    return v


def _parse_metrics(model_id: str, obj: object) -> RawMetrics:
    if not isinstance(obj, dict):
        raise _fail(model_id, "metrics must be an object")
    unknown = set(obj) - set(_ALL_METRICS)
    if unknown:
        raise _fail(model_id, f"unknown metric field(s): {sorted(unknown)}")
    missing = set(_ALL_METRICS) - set(obj)
    if missing:
        raise _fail(model_id, f"missing metric field(s): {sorted(missing)}")
    values: dict[str, float] = {}
    for name in _ALL_METRICS:
        v = _check_number(model_id, name, obj[name])
        if name in _SCORE01_METRICS and not 0.0 <= v <= 1.0:
            raise _fail(model_id, f"metric {name} out of range [0, 1]: {v}")
        values[name] = v
    if values["latency_ms"] <= 0.0:
        raise _fail(model_id, f"metric latency_ms must be > 0: {values['latency_ms']}")
    if values["cost_per_1k_tokens_usd"] < 0.0:
        raise _fail(
            model_id,
            f"metric cost_per_1k_tokens_usd must be >= 0: {values['cost_per_1k_tokens_usd']}",
        )
    return RawMetrics(**values)


def _parse_tag_set(model_id: str, name: str, value: object, allowed: tuple[str, ...]) -> frozenset[str]:
    if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
        raise _fail(model_id, f"{name} must be an array of strings")
    tags = frozenset(value)
    bad = tags - set(allowed)
    if bad:
        raise _fail(model_id, f"unknown {name} tag(s): {sorted(bad)}")
    return tags


def _parse_card(obj: object, position: int) -> ModelCard:
    if not isinstance(obj, dict):
        raise SchemaViolation(f"models[{position}] is not an object")
    model_id = obj.get("id")
    if not isinstance(model_id, str) or not model_id:
        raise SchemaViolation(f"models[{position}]: id must be a nonempty string")
    unknown = set(obj) - _MODEL_FIELDS
    if unknown:
        raise _fail(model_id, f"unknown field(s): {sorted(unknown)}")
    missing = _REQUIRED_MODEL_FIELDS - set(obj)
    if missing:
        raise _fail(model_id, f"missing field(s): {sorted(missing)}")
    if not isinstance(obj["name"], str) or not isinstance(obj["provider"], str):
        raise _fail(model_id, "name and provider must be strings")
    params_b = _check_number(model_id, "params_b", obj["params_b"])
    if params_b < 0.0:
        raise _fail(model_id, f"params_b must be >= 0: {params_b}")
    task_types = _parse_tag_set(model_id, "task_types", obj["task_types"], TASK_TYPES)
    if not task_types:
        raise _fail(model_id, "task_types must be nonempty")
    domains = _parse_tag_set(model_id, "domains", obj["domains"], DOMAINS)
    if not isinstance(obj["generalist"], bool):
        raise _fail(model_id, "generalist must be a boolean")
    if obj["generalist"] and task_types != frozenset(TASK_TYPES):
        raise _fail(model_id, "generalist=true requires task_types to cover every task type")
    annotations = obj.get("annotations", {})
    if not isinstance(annotations, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in annotations.items()
    ):
        raise _fail(model_id, "annotations must be an object of strings")
    metrics = _parse_metrics(model_id, obj["metrics"])
    return ModelCard(
        id=model_id,
        name=obj["name"],
        provider=obj["provider"],
        params_b=params_b,
        task_types=task_types,
        domains=domains,
        generalist=obj["generalist"],
        metrics=metrics,
        annotations=dict(annotations),
    )


def _reject_constant(token: str) -> float:
    raise MalformedCatalog(f"non-finite JSON constant {token!r} not allowed")


def load_catalog(source: bytes | io.IOBase) -> list[ModelCard]:
    """Parse and validate a catalog document; all cards or an exception.

    Accepts raw bytes or a binary/text stream. Syntax errors raise
    MalformedCatalog with the byte position; schema errors raise
    SchemaViolation naming the model (or field) at fault.
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedCatalog(f"catalog is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedCatalog(f"invalid JSON at byte {exc.pos}: {exc.msg}") from exc

    if not isinstance(doc, dict):
        raise SchemaViolation("top level must be an object")
    unknown = set(doc) - {"schema_version", "models"}
    if unknown:
        raise SchemaViolation(f"unknown top-level field(s): {sorted(unknown)}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaViolation(
            f"schema_version must be {SCHEMA_VERSION}, got {doc.get('schema_version')!r}"
        )
    models = doc.get("models")
    if not isinstance(models, list):
        raise SchemaViolation("models must be an array")

    cards: list[ModelCard] = []
    seen: set[str] = set()
    for position, obj in enumerate(models):
        card = _parse_card(obj, position)
        if card.id in seen:
            raise SchemaViolation(f'duplicate model id "{card.id}"')
        seen.add(card.id)
        cards.append(card)
    return cards


def load_catalog_file(path: str) -> list[ModelCard]:
    with open(path, "rb") as fh:
        return load_catalog(fh)


def normalize_catalog(cards: list[ModelCard], version: int = 0) -> NormalizedCatalog:
    """Min-max normalize every metric over the catalog into model vectors.

    Higher-is-better metrics map as (x - min) / (max - min); latency and
    cost invert as (max - x) / (max - min) so 1.0 is always best. A metric
    constant across the catalog maps to 0.5 for every model.
    """
    if not cards:
        raise EmptyCatalog("cannot normalize an empty catalog")
    raw = np.empty((len(cards), len(VECTOR_DIMENSIONS)), dtype=np.float64)
    invert = np.zeros(len(VECTOR_DIMENSIONS), dtype=np.bool_)
    for j, (metric, lower_is_better) in enumerate(_DIMENSION_SOURCES):
        invert[j] = lower_is_better
        for i, card in enumerate(cards):
            raw[i, j] = getattr(card.metrics, metric)
    vectors = _kernels.minmax_normalize(raw, invert)
    vectors.setflags(write=False)

    bounds: dict[str, tuple[float, float]] = {}
    for metric in _ALL_METRICS:
        column = [getattr(card.metrics, metric) for card in cards]
        bounds[metric] = (min(column), max(column))
    return NormalizedCatalog(
        cards=tuple(cards),
        vectors=vectors,
        metric_bounds=bounds,
        version=version,
    )


def top_k(
    catalog: NormalizedCatalog, query: np.ndarray, k: int
) -> list[tuple[str, float]]:
    """Exact cosine scan: the min(k, N) most similar models, best first.

    Ties in similarity break by ascending model id. A model vector with
    zero magnitude (worst at everything across a spread catalog) is given
    similarity 0.0; a zero-magnitude query is rejected.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(catalog) == 0:
        raise EmptyCatalog("top_k on an empty catalog")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (len(VECTOR_DIMENSIONS),):
        raise ValueError(f"query must have {len(VECTOR_DIMENSIONS)} components")
    if not np.any(q):
        raise ZeroVector("query vector has zero magnitude")
    sims = _kernels.cosine_scores(catalog.vectors, q)
    ids = catalog.ids
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
    return [(ids[i], float(sims[i])) for i in order[: min(k, len(ids))]]


class Registry:
    """Holds the live snapshot; reloads swap it atomically under a lock.

    Readers grab `snapshot` once per request and never see a mix of two
    versions. Versions count up from 1 with every successful publish.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._snapshot: NormalizedCatalog | None = None
        self._version = 0

    @property
    def snapshot(self) -> NormalizedCatalog:
        snap = self._snapshot
        if snap is None:
            raise EmptyCatalog("no catalog has been loaded")
        return snap

    @property
    def version(self) -> int:
        return self._version

    def publish(self, cards: list[ModelCard]) -> NormalizedCatalog:
        """Validate, normalize, and atomically swap in a new snapshot."""
        if not cards:
            raise EmptyCatalog("refusing to publish an empty catalog")
        with self._lock:
            snap = normalize_catalog(cards, version=self._version + 1)
            self._version = snap.version
            self._snapshot = snap
            return snap

    def load_file(self, path: str) -> NormalizedCatalog:
        """Publish from a catalog file; on any error the old snapshot stays."""
        return self.publish(load_catalog_file(path))
