"""Preference-weighted routing of queries to the best-fitting model.

A catalog of model cards is normalized into comparable [0, 1] vectors; a
query's explicit preference weights and analyzed task profile form a task
vector in the same space; cosine recall, capability filters, weighted
scoring, and a feedback bias pick the model. Ships with an HTTP service,
a CLI, and a workload simulator.
"""

from .analyzer import (
    ANALYZER_VERSION,
    DOMAINS,
    TASK_TYPES,
    PruneConfig,
    TaskProfile,
    analyze,
    classify_domain,
    classify_task,
    estimate_complexity,
    prune_query,
)
from .errors import (
    BackendFailure,
    BackendTimeout,
    DuplicateFeedback,
    EmptyBatch,
    EmptyCatalog,
    EmptyQuery,
    MalformedCatalog,
    NoModelAvailable,
    OptiRouteError,
    SchemaViolation,
    UnknownDecision,
    UnknownPolicyModel,
    ZeroPreferences,
    ZeroVector,
)
from .feedback import ClusterKey, DecisionStore, FeedbackEvent, FeedbackStore, cluster_of
from .registry import (
    VECTOR_DIMENSIONS,
    ModelCard,
    NormalizedCatalog,
    RawMetrics,
    Registry,
    load_catalog,
    load_catalog_file,
    normalize_catalog,
    top_k,
)
from .router import (
    PROFILES,
    BatchDecision,
    PreferenceVector,
    RouterConfig,
    RoutingDecision,
    build_task_vector,
    cosine_similarity,
    filter_candidates,
    route,
    route_batch,
    score,
)
from .sim import WorkloadSpec, evaluate, generate_workload

__version__ = "0.1.0"

__all__ = [
    "ANALYZER_VERSION",
    "BackendFailure",
    "BackendTimeout",
    "BatchDecision",
    "ClusterKey",
    "DecisionStore",
    "DuplicateFeedback",
    "DOMAINS",
    "EmptyBatch",
    "EmptyCatalog",
    "EmptyQuery",
    "FeedbackEvent",
    "FeedbackStore",
    "MalformedCatalog",
    "ModelCard",
    "NoModelAvailable",
    "NormalizedCatalog",
    "OptiRouteError",
    "PROFILES",
    "PreferenceVector",
    "PruneConfig",
    "RawMetrics",
    "Registry",
    "RouterConfig",
    "RoutingDecision",
    "SchemaViolation",
    "TASK_TYPES",
    "TaskProfile",
    "UnknownDecision",
    "UnknownPolicyModel",
    "VECTOR_DIMENSIONS",
    "WorkloadSpec",
    "ZeroPreferences",
    "ZeroVector",
    "analyze",
    "build_task_vector",
    "classify_domain",
    "classify_task",
    "cluster_of",
    "cosine_similarity",
    "estimate_complexity",
    "evaluate",
    "filter_candidates",
    "generate_workload",
    "load_catalog",
    "load_catalog_file",
    "normalize_catalog",
    "prune_query",
    "route",
    "route_batch",
    "score",
    "top_k",
    "__version__",
]
