"""Thumbs-up/down feedback joined to routing decisions.

Events are keyed by decision_id (one per decision), logged append-only as
newline-delimited JSON, and aggregated into per-(model, cluster) counters.
The counters are a cache: replaying the log onto an empty store must
reproduce them exactly, which is how a restart recovers state.

The bias a model earns in a cluster is clamp(0.1 * (ups - downs), -0.3,
+0.3). The 0.1 step and the +/-0.3 clamp are frozen alongside the score
clamp in the router: bounded influence means feedback can tip close calls
but never bury a model that outscores another by 0.6 or more.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import NamedTuple

from .analyzer import DOMAINS, TASK_TYPES, TaskProfile
from .errors import DuplicateFeedback, UnknownDecision

SIGNALS = ("up", "down")

BIAS_STEP = 0.1
BIAS_CLAMP = 0.3


class ClusterKey(NamedTuple):
    """Granularity at which feedback generalizes to future queries."""

    task_type: str
    domain: str
    complexity_bucket: int


def cluster_of(profile: TaskProfile) -> ClusterKey:
    """Bucket = min(3, floor(complexity / 0.25)); 0.2 -> 0, 0.8 -> 3."""
    bucket = min(3, int(math.floor(profile.complexity / 0.25)))
    return ClusterKey(profile.task_type, profile.domain, bucket)


def bias_from_counts(ups: int, downs: int) -> float:
    return max(-BIAS_CLAMP, min(BIAS_CLAMP, BIAS_STEP * (ups - downs)))


@dataclass(frozen=True)
class FeedbackEvent:
    decision_id: str
    signal: str
    ts: str | None = None

    def __post_init__(self) -> None:
        if not self.decision_id:
            raise ValueError("decision_id must be nonempty")
        if self.signal not in SIGNALS:
            raise ValueError(f"signal must be one of {SIGNALS}, got {self.signal!r}")


class DecisionRecord(NamedTuple):
    decision_id: str
    model_id: str
    cluster: ClusterKey
    ts: float


class DecisionStore:
    """Bounded in-memory map of recent decisions, feedback-joinable.

    Entries expire after `retention_seconds` (default 7 days) and the map
    is capped at `max_entries`, oldest first. With a path the store also
    appends one JSON line per decision and replays unexpired lines on
    startup, so feedback survives a restart.
    """

    def __init__(
        self,
        path: str | None = None,
        retention_seconds: float = 7 * 24 * 3600.0,
        max_entries: int = 100_000,
    ) -> None:
        if retention_seconds <= 0 or max_entries < 1:
            raise ValueError("retention_seconds and max_entries must be positive")
        self._path = path
        self._retention = retention_seconds
        self._max_entries = max_entries
        self._lock = threading.Lock()
        self._records: dict[str, DecisionRecord] = {}
        if path and os.path.exists(path):
            self._replay(path)

    def _replay(self, path: str) -> None:
        now = time.time()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                rec = DecisionRecord(
                    decision_id=obj["decision_id"],
                    model_id=obj["model_id"],
                    cluster=ClusterKey(
                        obj["task_type"], obj["domain"], int(obj["complexity_bucket"])
                    ),
                    ts=float(obj["ts"]),
                )
                if now - rec.ts <= self._retention:
                    self._records[rec.decision_id] = rec

    def _prune_locked(self, now: float) -> None:
        cutoff = now - self._retention
        stale = [d for d, r in self._records.items() if r.ts < cutoff]
        for d in stale:
            del self._records[d]
        while len(self._records) > self._max_entries:
            oldest = min(self._records.values(), key=lambda r: r.ts)
            del self._records[oldest.decision_id]

    def put(self, decision_id: str, model_id: str, cluster: ClusterKey) -> None:
        now = time.time()
        rec = DecisionRecord(decision_id, model_id, cluster, now)
        with self._lock:
            self._records[rec.decision_id] = rec
            self._prune_locked(now)
            if self._path:
                line = json.dumps(
                    {
                        "decision_id": rec.decision_id,
                        "model_id": rec.model_id,
                        "task_type": rec.cluster.task_type,
                        "domain": rec.cluster.domain,
                        "complexity_bucket": rec.cluster.complexity_bucket,
                        "ts": rec.ts,
                    },
                    sort_keys=True,
                )
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")

    def get(self, decision_id: str) -> DecisionRecord:
        rec = self._records.get(decision_id)
        if rec is None:
            raise UnknownDecision(f"unknown decision_id {decision_id!r}")
        return rec

    def __len__(self) -> int:
        return len(self._records)


class FeedbackStore:
    """Counters per (model_id, ClusterKey) plus the append-only event log.

    Writes are serialized by a lock and hit the log before the counters,
    so an acknowledged event is always replayable. Reads (`bias`) take no
    lock; they may trail the newest write by one update, which routing
    tolerates.
    """

    def __init__(self, log_path: str | None = None) -> None:
        self._path = log_path
        self._lock = threading.Lock()
        self._counters: dict[tuple[str, ClusterKey], tuple[int, int]] = {}
        self._seen: set[str] = set()
        if log_path and os.path.exists(log_path):
            self.replay(log_path)

    # -- write path ------------------------------------------------------

    def record_feedback(
        self, event: FeedbackEvent, decisions: DecisionStore
    ) -> tuple[int, int]:
        """Join the event to its decision and bump that counter.

        Returns the (ups, downs) pair after the update. The log append
        happens before the in-memory update; duplicates and unknown ids
        change nothing.
        """
        with self._lock:
            if event.decision_id in self._seen:
                raise DuplicateFeedback(
                    f"feedback already recorded for decision {event.decision_id!r}"
                )
            rec = decisions.get(event.decision_id)
            ts = event.ts or datetime.now(timezone.utc).isoformat()
            line = json.dumps(
                {
                    "decision_id": event.decision_id,
                    "model_id": rec.model_id,
                    "task_type": rec.cluster.task_type,
                    "domain": rec.cluster.domain,
                    "complexity_bucket": rec.cluster.complexity_bucket,
                    "signal": event.signal,
                    "ts": ts,
                },
                sort_keys=True,
            )
            if self._path:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            return self._apply_locked(event.decision_id, rec.model_id, rec.cluster, event.signal)

    def _apply_locked(
        self, decision_id: str, model_id: str, cluster: ClusterKey, signal: str
    ) -> tuple[int, int]:
        key = (model_id, cluster)
        ups, downs = self._counters.get(key, (0, 0))
        if signal == "up":
            ups += 1
        else:
            downs += 1
        self._counters[key] = (ups, downs)
        self._seen.add(decision_id)
        return ups, downs

    def replay(self, log_path: str) -> int:
        """Rebuild counters from a log; returns the number of events applied."""
        applied = 0
        with open(log_path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        with self._lock:
            for line in lines:
                obj = json.loads(line)
                if obj["signal"] not in SIGNALS:
                    raise ValueError(f"bad signal in log: {obj['signal']!r}")
                if obj["decision_id"] in self._seen:
                    continue
                cluster = ClusterKey(
                    obj["task_type"], obj["domain"], int(obj["complexity_bucket"])
                )
                if cluster.task_type not in TASK_TYPES or cluster.domain not in DOMAINS:
                    raise ValueError(f"bad cluster in log: {cluster}")
                self._apply_locked(obj["decision_id"], obj["model_id"], cluster, obj["signal"])
                applied += 1
        return applied

    def reset(self) -> None:
        """Drop all counters and seen ids; truncates the log if durable."""
        with self._lock:
            self._counters.clear()
            self._seen.clear()
            if self._path and os.path.exists(self._path):
                open(self._path, "w").close()

    # -- read path -------------------------------------------------------

    def counts(self, model_id: str, cluster: ClusterKey) -> tuple[int, int]:
        return self._counters.get((model_id, cluster), (0, 0))

    def bias(self, model_id: str, cluster: ClusterKey) -> float:
        ups, downs = self._counters.get((model_id, cluster), (0, 0))
        return bias_from_counts(ups, downs)

    def snapshot_counters(self) -> dict[tuple[str, ClusterKey], tuple[int, int]]:
        with self._lock:
            return dict(self._counters)
