"""Operator command line: route, batch, catalog, serve, simulate.

Exit codes: 0 success, 1 domain errors (bad catalog content, no routable
model, empty batch), 2 usage errors (bad flags, malformed --prefs, bad
serve config). Machine output sits behind --json and uses the same
serializer as the HTTP service, so the two transports never drift.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import OptiRouteError
from .feedback import DecisionStore
from .registry import VECTOR_DIMENSIONS, load_catalog_file, normalize_catalog
from .router import (
    PROFILES,
    BatchDecision,
    PreferenceVector,
    RouterConfig,
    RoutingDecision,
    route,
    route_batch,
)
from .sim import (
    _parse_policies,
    evaluate,
    generate_workload,
    load_workload_spec,
    render_report,
    report_json,
)


class _Usage(Exception):
    """Flag-level problem: reported on stderr, exit code 2."""


def parse_prefs(text: str) -> PreferenceVector:
    """key=value CSV; unspecified weights stay 0.0 (an explicit --prefs
    enumerates what the user cares about; the balanced 0.5 default applies
    only when no preference input is given at all)."""
    kv: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise _Usage(f"bad --prefs entry {part!r}: expected key=value")
        key, raw = part.split("=", 1)
        key = key.strip()
        try:
            kv[key] = float(raw)
        except ValueError:
            raise _Usage(f"bad --prefs value for {key!r}: {raw!r} is not a number")
    if not kv:
        raise _Usage("--prefs needs at least one key=value entry")
    try:
        return PreferenceVector.from_dict(kv)
    except ValueError as exc:
        raise _Usage(f"bad --prefs: {exc}") from exc


def _resolve_prefs(args) -> tuple[PreferenceVector, tuple[str, ...]]:
    if getattr(args, "profile", None):
        preset = PROFILES.get(args.profile)
        if preset is None:
            raise _Usage(
                f"unknown profile {args.profile!r}; choose from {sorted(PROFILES)}"
            )
        return preset, ()
    if getattr(args, "prefs", None):
        return parse_prefs(args.prefs), ()
    return PROFILES["balanced"], ("defaulted-prefs",)


def _router_cfg(args) -> RouterConfig:
    if getattr(args, "k", None) is None:
        return RouterConfig()
    try:
        return RouterConfig(k=args.k)
    except ValueError as exc:
        raise _Usage(f"bad --k: {exc}") from exc


def _load_catalog(path: str):
    cards = load_catalog_file(path)
    return normalize_catalog(cards, version=1)


def render_decision(d: RoutingDecision, limit: int = 10) -> str:
    lines = [
        f"selected: {d.selected}",
        f"score: {d.score:.4f}  similarity: {d.similarity:.4f}  "
        f"fallback: {d.fallback_level}",
        f"task: {d.profile.task_type}  domain: {d.profile.domain}  "
        f"complexity: {d.profile.complexity:.2f}",
        f"analyzer: {d.analyzer_tag}"
        + (f"  tags: {', '.join(d.tags)}" if d.tags else ""),
        "candidates:",
    ]
    for c in d.candidates[:limit]:
        lines.append(f"  {c.model_id:<24} score {c.score:.4f}  sim {c.similarity:.4f}")
    if len(d.candidates) > limit:
        lines.append(f"  ... {len(d.candidates) - limit} more")
    lines.append(f"decision_id: {d.decision_id}")
    return "\n".join(lines)


def render_batch(b: BatchDecision) -> str:
    lines = [
        f"sampled {len(b.sample_indices)} of {b.n_queries}",
        f"selected: {b.selected}  (selection_mode: {b.selection_mode})",
        f"sample_indices: {', '.join(str(i) for i in b.sample_indices)}",
        "per-sample selections:",
    ]
    for idx, d in zip(b.sample_indices, b.decisions):
        lines.append(
            f"  [{idx}] {d.selected}  score {d.score:.4f}  "
            f"fallback {d.fallback_level}"
        )
    return "\n".join(lines)


def cmd_route(args) -> int:
    catalog = _load_catalog(args.catalog)
    if args.query is not None:
        query = args.query
    else:
        with open(args.query_file, "r", encoding="utf-8") as fh:
            query = fh.read().rstrip("\n")
    prefs, tags = _resolve_prefs(args)
    decision = route(
        query, prefs, catalog, _router_cfg(args),
        store=DecisionStore(), tags=tags,
    )
    if args.json:
        print(json.dumps(decision.to_dict(), sort_keys=True, indent=2))
    else:
        print(render_decision(decision))
    return 0


def cmd_batch(args) -> int:
    catalog = _load_catalog(args.catalog)
    with open(args.queries_file, "r", encoding="utf-8") as fh:
        queries = [line.strip() for line in fh if line.strip()]
    prefs, _tags = _resolve_prefs(args)
    if not 0.0 < args.sample_rate <= 1.0:
        raise _Usage(f"--sample-rate must be in (0, 1], got {args.sample_rate}")
    decision = route_batch(
        queries, prefs, catalog, _router_cfg(args),
        store=DecisionStore(), sample_rate=args.sample_rate, seed=args.seed,
    )
    if args.json:
        print(json.dumps(decision.to_dict(), sort_keys=True, indent=2))
    else:
        print(render_batch(decision))
    return 0


def cmd_catalog(args) -> int:
    try:
        cards = load_catalog_file(args.catalog)
    except OptiRouteError as exc:
        if args.json:
            print(json.dumps({"ok": False, "violations": [str(exc)]}, sort_keys=True))
        else:
            print(f"violation: {exc}")
        return 1
    if args.action == "validate":
        if args.json:
            print(json.dumps({"ok": True, "models": len(cards)}, sort_keys=True))
        else:
            print(f"OK: {len(cards)} models")
        return 0
    catalog = normalize_catalog(cards, version=1)
    if args.json:
        print(json.dumps(
            {
                "dimensions": list(VECTOR_DIMENSIONS),
                "models": [
                    {"id": card.id, "vector": [float(x) for x in catalog.vectors[i]]}
                    for i, card in enumerate(catalog.cards)
                ],
            },
            sort_keys=True, indent=2,
        ))
    else:
        width = max(len(card.id) for card in catalog.cards)
        width = max(width, len("model"))
        header = " ".join(f"{d[:9]:>9}" for d in VECTOR_DIMENSIONS)
        print(f"{'model':<{width}} {header}")
        for i, card in enumerate(catalog.cards):
            row = " ".join(f"{x:>9.3f}" for x in catalog.vectors[i])
            print(f"{card.id:<{width}} {row}")
    return 0


def cmd_serve(args) -> int:
    from .service import build_app, load_config

    try:
        config = load_config(args.config)
        app = build_app(config)
    except (OptiRouteError, OSError, ValueError, TypeError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return 2
    import uvicorn

    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    except KeyboardInterrupt:
        pass
    return 0


def cmd_simulate(args) -> int:
    catalog = _load_catalog(args.catalog)
    spec = load_workload_spec(args.workload)
    labels = [p.strip() for p in args.policies.split(",") if p.strip()]
    try:
        _parse_policies(labels, catalog)
    except ValueError as exc:
        raise _Usage(str(exc)) from exc
    prefs, _tags = _resolve_prefs(args)
    workload = generate_workload(spec)
    report = evaluate(
        workload, catalog, labels, prefs=prefs, policy_seed=args.seed
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report_json(report))
    print(render_report(report), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optiroute",
        description="Preference-weighted model routing over a catalog of model cards.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_prefs_flags(p: argparse.ArgumentParser) -> None:
        group = p.add_mutually_exclusive_group()
        group.add_argument("--profile", help="named preference preset")
        group.add_argument("--prefs", help="explicit weights, e.g. accuracy=1.0,cost=0.8")

    p_route = sub.add_parser("route", help="route one query")
    p_route.add_argument("--catalog", required=True)
    src = p_route.add_mutually_exclusive_group(required=True)
    src.add_argument("--query")
    src.add_argument("--query-file")
    add_prefs_flags(p_route)
    p_route.add_argument("--k", type=int)
    p_route.add_argument("--json", action="store_true")
    p_route.set_defaults(func=cmd_route)

    p_batch = sub.add_parser("batch", help="route a batch of queries to one model")
    p_batch.add_argument("--catalog", required=True)
    p_batch.add_argument("--queries-file", required=True)
    add_prefs_flags(p_batch)
    p_batch.add_argument("--sample-rate", type=float, default=0.02)
    p_batch.add_argument("--seed", type=int, default=0)
    p_batch.add_argument("--k", type=int)
    p_batch.add_argument("--json", action="store_true")
    p_batch.set_defaults(func=cmd_batch)

    p_cat = sub.add_parser("catalog", help="validate or normalize a catalog file")
    p_cat.add_argument("action", choices=("validate", "normalize"))
    p_cat.add_argument("--catalog", required=True)
    p_cat.add_argument("--json", action="store_true")
    p_cat.set_defaults(func=cmd_catalog)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", required=True)
    p_serve.set_defaults(func=cmd_serve)

    p_sim = sub.add_parser("simulate", help="generate a workload and compare policies")
    p_sim.add_argument("--catalog", required=True)
    p_sim.add_argument("--workload", required=True)
    p_sim.add_argument("--policies", default="optiroute")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out")
    add_prefs_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OptiRouteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
