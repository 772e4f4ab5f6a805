"""HTTP front-end: routing, batch, feedback, catalog ops, inference dispatch.

One FastAPI app per deployment config. The app owns the live catalog
registry (hot-reloadable, atomic swap), the decision and feedback stores,
and the adapter bindings that stand in for real model backends. Request
handlers read exactly one catalog snapshot each, so a reload never leaks
a half-swapped catalog into a response.

Error mapping: invariant violations 400, empty catalog 503, no routable
model 422, unknown decision 404, duplicate feedback 409, backend failure
502, backend timeout 504. Backend errors still carry the decision_id so
the caller can file negative feedback on the failed pick.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, ConfigDict

from .analyzer import PruneConfig, external_analyzer, heuristic_analyzer
from .errors import (
    BackendFailure,
    BackendTimeout,
    DuplicateFeedback,
    EmptyBatch,
    EmptyCatalog,
    EmptyQuery,
    MalformedCatalog,
    NoModelAvailable,
    SchemaViolation,
    UnknownDecision,
    ZeroPreferences,
)
from .feedback import DecisionStore, FeedbackEvent, FeedbackStore
from .registry import Registry, load_catalog_file
from .router import (
    PROFILES,
    PreferenceVector,
    RouterConfig,
    route,
    route_batch,
)

ADAPTER_KINDS = ("echo", "http")


def echo_output(model_id: str, query: str) -> str:
    """Canonical echo-adapter output; bit-exact for end-to-end tests."""
    digest = hashlib.sha256(query.encode()).hexdigest()[:16]
    return f"echo:{model_id}:{digest}"


@dataclass(frozen=True)
class Binding:
    kind: str
    base_url: str | None = None
    auth_env: str | None = None
    timeout: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in ADAPTER_KINDS:
            raise ValueError(f"adapter kind must be one of {ADAPTER_KINDS}, got {self.kind!r}")
        if self.kind == "http" and not self.base_url:
            raise ValueError("http adapter requires base_url")
        if self.timeout <= 0:
            raise ValueError("adapter timeout must be > 0")


@dataclass(frozen=True)
class ServiceConfig:
    catalog_path: str
    host: str = "127.0.0.1"
    port: int = 8080
    profiles: dict[str, PreferenceVector] = field(default_factory=dict)
    adapters: dict[str, Binding] = field(default_factory=lambda: {"default": Binding("echo")})
    router: RouterConfig = field(default_factory=RouterConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    analyzer_endpoint: str | None = None
    analyzer_timeout: float = 0.5
    decision_log: str | None = None
    feedback_log: str | None = None
    retention_days: float = 7.0
    bearer_token_env: str | None = None


def load_config(path: str) -> ServiceConfig:
    """Parse a deployment config; relative paths resolve against the file."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    allowed = {
        "listen", "catalog_path", "profiles", "adapters", "router", "prune",
        "analyzer_endpoint", "analyzer_timeout", "decision_log",
        "feedback_log", "retention_days", "bearer_token_env",
    }
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"config has unknown field(s): {sorted(unknown)}")
    if "catalog_path" not in obj:
        raise ValueError("config missing catalog_path")

    base = os.path.dirname(os.path.abspath(path))

    def respath(p: str | None) -> str | None:
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.join(base, p)

    listen = obj.get("listen", {})
    profiles = {
        name: PreferenceVector.from_dict(spec)
        for name, spec in obj.get("profiles", {}).items()
    }
    adapters = {
        mid: Binding(**spec) for mid, spec in obj.get("adapters", {"default": {"kind": "echo"}}).items()
    }
    return ServiceConfig(
        catalog_path=respath(obj["catalog_path"]),
        host=listen.get("host", "127.0.0.1"),
        port=int(listen.get("port", 8080)),
        profiles=profiles,
        adapters=adapters,
        router=RouterConfig(**obj.get("router", {})),
        prune=PruneConfig(**obj.get("prune", {})),
        analyzer_endpoint=obj.get("analyzer_endpoint"),
        analyzer_timeout=float(obj.get("analyzer_timeout", 0.5)),
        decision_log=respath(obj.get("decision_log")),
        feedback_log=respath(obj.get("feedback_log")),
        retention_days=float(obj.get("retention_days", 7.0)),
        bearer_token_env=obj.get("bearer_token_env"),
    )


def resolve_binding(adapters: dict[str, Binding], model_id: str) -> Binding | None:
    return adapters.get(model_id) or adapters.get("default")


def check_adapter_coverage(adapters: dict[str, Binding], model_ids: tuple[str, ...]) -> None:
    missing = [mid for mid in model_ids if resolve_binding(adapters, mid) is None]
    if missing:
        raise ValueError(f"no adapter binding for model id(s): {missing}")


def dispatch(binding: Binding, model_id: str, query: str, decision_id: str) -> str:
    """Run one inference through a bound adapter; raises Backend* on failure."""
    if binding.kind == "echo":
        return echo_output(model_id, query)
    import requests

    headers = {}
    if binding.auth_env:
        token = os.environ.get(binding.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
    try:
        resp = requests.post(
            binding.base_url,
            json={"model": model_id, "query": query},
            timeout=binding.timeout,
            headers=headers,
        )
    except requests.Timeout as exc:
        raise BackendTimeout(f"backend timed out after {binding.timeout}s: {exc}",
                             decision_id=decision_id) from exc
    except Exception as exc:
        raise BackendFailure(f"backend request failed: {exc}", decision_id=decision_id) from exc
    if resp.status_code >= 400:
        raise BackendFailure(f"backend returned HTTP {resp.status_code}", decision_id=decision_id)
    try:
        output = resp.json().get("output")
    except ValueError as exc:
        raise BackendFailure(f"backend returned invalid JSON: {exc}", decision_id=decision_id) from exc
    if not isinstance(output, str):
        raise BackendFailure("backend response missing string field 'output'",
                             decision_id=decision_id)
    return output


class _BadRequest(Exception):
    pass


class RouteRequestModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    query: str
    prefs: dict[str, float] | None = None
    profile_name: str | None = None
    k: int | None = None
    mode: Literal["route_only", "infer"] = "route_only"


class BatchRequestModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    queries: list[str]
    prefs: dict[str, float] | None = None
    profile_name: str | None = None
    k: int | None = None
    sample_rate: float = 0.02
    seed: int = 0


class FeedbackModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    decision_id: str
    signal: str
    ts: str | None = None


class ReloadModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    path: str | None = None


class AppState:
    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        self.registry = Registry()
        self.registry.load_file(config.catalog_path)
        check_adapter_coverage(config.adapters, self.registry.snapshot.ids)
        self.decisions = DecisionStore(
            path=config.decision_log,
            retention_seconds=config.retention_days * 24 * 3600.0,
        )
        self.feedback = FeedbackStore(log_path=config.feedback_log)
        self.profiles = dict(PROFILES)
        self.profiles.update(config.profiles)
        if config.analyzer_endpoint:
            self.analyzer = external_analyzer(
                config.analyzer_endpoint, config.analyzer_timeout, config.prune
            )
        else:
            self.analyzer = heuristic_analyzer(config.prune)

    def resolve_prefs(
        self, prefs: dict[str, float] | None, profile_name: str | None
    ) -> tuple[PreferenceVector, tuple[str, ...]]:
        if prefs is not None and profile_name is not None:
            raise _BadRequest("prefs and profile_name are mutually exclusive")
        if profile_name is not None:
            preset = self.profiles.get(profile_name)
            if preset is None:
                raise _BadRequest(f'unknown profile_name "{profile_name}"')
            return preset, ()
        if prefs is not None:
            try:
                return PreferenceVector.from_dict(prefs), ()
            except ValueError as exc:
                raise _BadRequest(f"bad prefs: {exc}") from exc
        return self.profiles["balanced"], ("defaulted-prefs",)

    def router_cfg(self, k: int | None) -> RouterConfig:
        if k is None:
            return self.config.router
        try:
            return dataclasses.replace(self.config.router, k=k)
        except ValueError as exc:
            raise _BadRequest(f"bad k: {exc}") from exc


def build_app(config: ServiceConfig) -> FastAPI:
    state = AppState(config)
    app = FastAPI(title="optiroute", docs_url=None, redoc_url=None)
    app.state.optiroute = state

    token = None
    if config.bearer_token_env:
        token = os.environ.get(config.bearer_token_env, "")
        if not token:
            raise ValueError(
                f"bearer_token_env names {config.bearer_token_env!r} but that "
                "environment variable is empty or unset"
            )

    def _err(status: int):
        def handler(_request: Request, exc: Exception) -> JSONResponse:
            body: dict[str, object] = {"error": str(exc)}
            decision_id = getattr(exc, "decision_id", None)
            if decision_id is not None:
                body["decision_id"] = decision_id
            return JSONResponse(body, status_code=status)
        return handler

    for exc_type, status in (
        (_BadRequest, 400),
        (EmptyQuery, 400),
        (ZeroPreferences, 400),
        (EmptyBatch, 400),
        (MalformedCatalog, 400),
        (SchemaViolation, 400),
        (EmptyCatalog, 503),
        (NoModelAvailable, 422),
        (UnknownDecision, 404),
        (DuplicateFeedback, 409),
        (BackendFailure, 502),
        (BackendTimeout, 504),
    ):
        app.add_exception_handler(exc_type, _err(status))

    if token is not None:
        expected = f"Bearer {token}"

        @app.middleware("http")
        async def require_token(request: Request, call_next):
            if request.url.path != "/v1/healthz":
                if request.headers.get("authorization") != expected:
                    return JSONResponse({"error": "unauthorized"}, status_code=401)
            return await call_next(request)

    def _route_decision(req: RouteRequestModel):
        prefs, tags = state.resolve_prefs(req.prefs, req.profile_name)
        snapshot = state.registry.snapshot
        cfg = state.router_cfg(req.k)
        decision = route(
            req.query, prefs, snapshot, cfg,
            bias_source=state.feedback.bias,
            analyzer=state.analyzer,
            store=state.decisions,
            tags=tags,
        )
        return decision

    @app.post("/v1/route")
    def post_route(req: RouteRequestModel):
        if req.mode != "route_only":
            raise _BadRequest("mode=infer goes to /v1/infer")
        return _route_decision(req).to_dict()

    @app.post("/v1/infer")
    def post_infer(req: RouteRequestModel):
        decision = _route_decision(req)
        binding = resolve_binding(config.adapters, decision.selected)
        if binding is None:
            raise BackendFailure(
                f"no adapter binding for model {decision.selected!r}",
                decision_id=decision.decision_id,
            )
        t0 = time.perf_counter()
        output = dispatch(binding, decision.selected, req.query, decision.decision_id)
        latency_ms = (time.perf_counter() - t0) * 1000.0
        return {
            "decision": decision.to_dict(),
            "output": output,
            "latency_ms": latency_ms,
        }

    @app.post("/v1/route/batch")
    def post_batch(req: BatchRequestModel):
        prefs, _tags = state.resolve_prefs(req.prefs, req.profile_name)
        snapshot = state.registry.snapshot
        cfg = state.router_cfg(req.k)
        try:
            decision = route_batch(
                req.queries, prefs, snapshot, cfg,
                bias_source=state.feedback.bias,
                analyzer=state.analyzer,
                store=state.decisions,
                sample_rate=req.sample_rate,
                seed=req.seed,
            )
        except ValueError as exc:
            raise _BadRequest(str(exc)) from exc
        return decision.to_dict()

    @app.post("/v1/feedback", status_code=204)
    def post_feedback(req: FeedbackModel):
        try:
            event = FeedbackEvent(decision_id=req.decision_id, signal=req.signal, ts=req.ts)
        except ValueError as exc:
            raise _BadRequest(str(exc)) from exc
        state.feedback.record_feedback(event, state.decisions)
        return Response(status_code=204)

    @app.get("/v1/models")
    def get_models():
        snapshot = state.registry.snapshot
        return {
            "version": snapshot.version,
            "models": [
                {
                    "id": card.id,
                    "task_types": sorted(card.task_types),
                    "domains": sorted(card.domains),
                    "generalist": card.generalist,
                    "normalized_vector": [float(x) for x in snapshot.vectors[i]],
                }
                for i, card in enumerate(snapshot.cards)
            ],
        }

    @app.post("/v1/catalog/reload")
    def post_reload(req: ReloadModel):
        path = req.path or config.catalog_path
        try:
            cards = load_catalog_file(path)
            check_adapter_coverage(config.adapters, tuple(c.id for c in cards))
        except OSError as exc:
            raise _BadRequest(f"cannot read catalog: {exc}") from exc
        except ValueError as exc:
            raise _BadRequest(str(exc)) from exc
        snapshot = state.registry.publish(cards)
        return {"version": snapshot.version, "model_count": len(snapshot)}

    @app.get("/v1/healthz")
    def get_healthz():
        try:
            version = state.registry.snapshot.version
        except EmptyCatalog:
            version = 0
        return {"status": "ok", "catalog_version": version}

    return app


def serve(config: ServiceConfig) -> None:
    """Blocking: build the app and run it until interrupted."""
    app = build_app(config)
    import uvicorn

    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
