"""Exception hierarchy shared across the package.

Every domain error derives from OptiRouteError so callers (CLI, service)
can distinguish domain failures from programming errors with one except
clause and map them to exit codes / HTTP statuses.
"""

from __future__ import annotations


class OptiRouteError(Exception):
    """Base class for all domain errors raised by this package."""


class MalformedCatalog(OptiRouteError):
    """Catalog document is not syntactically valid (bad JSON, wrong top level)."""


class SchemaViolation(OptiRouteError):
    """Catalog parsed but violates the schema: missing field, out-of-range
    value, duplicate id, unknown field. The message names the offending
    model id or field."""


class EmptyCatalog(OptiRouteError):
    """An operation that needs at least one model got none."""


class ZeroVector(OptiRouteError):
    """Cosine similarity requested for a zero-magnitude vector."""


class EmptyQuery(OptiRouteError):
    """Query text is empty (or whitespace only)."""


class ZeroPreferences(OptiRouteError):
    """All preference weights are zero and the inferred complexity is zero,
    so the task vector would have zero magnitude."""


class NoModelAvailable(OptiRouteError):
    """Every fallback level was exhausted without finding a usable model."""


class EmptyBatch(OptiRouteError):
    """Batch routing was asked to route zero queries."""


class UnknownDecision(OptiRouteError):
    """Feedback referenced a decision id that is not in the decision store."""


class DuplicateFeedback(OptiRouteError):
    """A second feedback event arrived for the same decision id."""


class UnknownPolicyModel(OptiRouteError):
    """A simulation policy referenced a model id absent from the catalog."""


class BackendError(OptiRouteError):
    """Inference backend failed after routing succeeded."""

    def __init__(self, message: str, decision_id: str | None = None):
        super().__init__(message)
        self.decision_id = decision_id


class BackendFailure(BackendError):
    """Adapter returned an error or an unusable response."""


class BackendTimeout(BackendError):
    """Adapter did not answer within its configured timeout."""
