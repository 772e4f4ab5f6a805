"""Workload generation fidelity and policy-comparison accounting."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import catalog_of, make_card
from optiroute.analyzer import analyze
from optiroute.errors import UnknownPolicyModel
from optiroute.router import PreferenceVector, score
from optiroute.sim import (
    TEMPLATES,
    WorkloadSpec,
    evaluate,
    generate_workload,
    load_workload_spec,
    render_report,
    report_json,
)


def spec_of(n=50, seed=3, **over) -> WorkloadSpec:
    base = dict(
        n_queries=n,
        task_mix={"sentiment_analysis": 0.5, "translation": 0.3, "other": 0.2},
        domain_mix={"general": 0.6, "healthcare": 0.4},
        complexity_dist={"low_frac": 0.6, "mid_frac": 0.3, "high_frac": 0.1},
        seed=seed,
    )
    base.update(over)
    return WorkloadSpec(**base)


def eval_catalog():
    return catalog_of([
        make_card(
            "penny",
            task_types=("sentiment_analysis", "translation", "other"),
            domains=("general", "healthcare"),
            cost=0.05, latency_ms=30.0, accuracy=0.6,
        ),
        make_card(
            "grand", generalist=True,
            cost=3.0, latency_ms=700.0, accuracy=0.95,
        ),
    ])


# -- spec validation ------------------------------------------------------

def test_spec_accepts_valid():
    spec = spec_of()
    assert spec.n_queries == 50


@pytest.mark.parametrize("over", [
    {"n_queries": 0},
    {"task_mix": {"sentiment_analysis": 0.4, "translation": 0.4}},  # sums to 0.8
    {"task_mix": {"sorcery": 1.0}},
    {"task_mix": {}},
    {"domain_mix": {"midgard": 1.0}},
    {"complexity_dist": {"low_frac": 1.0}},
    {"complexity_dist": {"low_frac": 0.5, "mid_frac": 0.5, "peak_frac": 0.0}},
    {"task_mix": {"sentiment_analysis": 1.2, "translation": -0.2}},
])
def test_spec_rejects_bad(over):
    with pytest.raises(ValueError):
        spec_of(**over)


def test_load_workload_spec_round_trip(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({
        "n_queries": 9,
        "task_mix": {"summarization": 1.0},
        "domain_mix": {"legal": 1.0},
        "complexity_dist": {"low_frac": 1.0, "mid_frac": 0.0, "high_frac": 0.0},
        "seed": 4,
    }), encoding="utf-8")
    spec = load_workload_spec(str(path))
    assert spec == WorkloadSpec(
        9, {"summarization": 1.0}, {"legal": 1.0},
        {"low_frac": 1.0, "mid_frac": 0.0, "high_frac": 0.0}, 4,
    )


def test_load_workload_spec_rejects_bad_fields(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"n_queries": 5, "surprise": 1}), encoding="utf-8")
    with pytest.raises(ValueError) as err:
        load_workload_spec(str(path))
    assert "surprise" in str(err.value)

    path.write_text(json.dumps({"n_queries": 5}), encoding="utf-8")
    with pytest.raises(ValueError) as err:
        load_workload_spec(str(path))
    assert "task_mix" in str(err.value)


def test_example_workload_spec_parses():
    example = Path(__file__).resolve().parents[1] / "configs" / "workload.example.json"
    spec = load_workload_spec(str(example))
    assert spec.n_queries >= 100


# -- generation -----------------------------------------------------------

def test_generate_deterministic():
    a = generate_workload(spec_of())
    b = generate_workload(spec_of())
    assert a == b
    c = generate_workload(spec_of(seed=8))
    assert a != c


def test_generate_shape_and_mix():
    spec = spec_of(n=400, seed=1)
    workload = generate_workload(spec)
    assert len(workload) == 400
    tasks = [ground.task_type for _, ground in workload]
    frac = tasks.count("sentiment_analysis") / len(tasks)
    assert abs(frac - 0.5) < 0.08
    assert set(tasks) <= set(spec.task_mix)
    domains = {ground.domain for _, ground in workload}
    assert domains <= {"general", "healthcare"}


def test_generated_text_recovers_ground_truth():
    mix = {t: 1.0 / len(TEMPLATES) for t in TEMPLATES}
    spec = WorkloadSpec(
        n_queries=300,
        task_mix=mix,
        domain_mix={"general": 0.4, "healthcare": 0.2, "legal": 0.2, "finance": 0.2},
        complexity_dist={"low_frac": 0.4, "mid_frac": 0.4, "high_frac": 0.2},
        seed=11,
    )
    workload = generate_workload(spec)
    task_hits = 0
    domain_hits = 0
    for text, ground in workload:
        got = analyze(text)
        task_hits += got.task_type == ground.task_type
        domain_hits += got.domain == ground.domain
    assert task_hits / len(workload) >= 0.95
    assert domain_hits / len(workload) >= 0.95


# -- policies -------------------------------------------------------------

def test_policy_parsing_errors():
    catalog = eval_catalog()
    workload = generate_workload(spec_of(n=3))
    with pytest.raises(UnknownPolicyModel):
        evaluate(workload, catalog, ["always:ghost"])
    with pytest.raises(ValueError):
        evaluate(workload, catalog, ["coin-flip"])
    with pytest.raises(ValueError):
        evaluate(workload, catalog, [])
    with pytest.raises(ValueError):
        evaluate([], catalog, ["optiroute"])


def test_evaluate_report_shape_and_accounting():
    catalog = eval_catalog()
    workload = generate_workload(spec_of(n=30))
    report = evaluate(
        workload, catalog,
        ["optiroute", "always:grand", "random", "cheapest_passing_filter"],
        prefs=PreferenceVector(cost=1.0, latency=0.3),
        policy_seed=5,
    )
    head = report["header"]
    assert head["n_queries"] == 30
    assert head["catalog_version"] == 1
    assert head["policy_seed"] == 5
    assert head["prefs"]["cost"] == 1.0
    assert "cost" in head["cost_model"]
    assert "proxy" in head["quality_proxy"]

    for label in ("optiroute", "always:grand", "random", "cheapest_passing_filter"):
        row = report["policies"][label]
        assert set(row) == {
            "total_cost_usd", "mean_latency_ms", "mean_selection_score",
            "fallback_rate", "selections",
        }
        assert sum(row["selections"].values()) == 30
        assert set(row["selections"]) <= {"penny", "grand"}
        assert 0.0 <= row["mean_selection_score"] <= 1.0
        assert 0.0 <= row["fallback_rate"] <= 1.0

    # the pinned policy admits exact independent accounting
    words = sum(len(text.split()) for text, _ in workload)
    grand_row = report["policies"]["always:grand"]
    assert grand_row["selections"] == {"grand": 30}
    assert grand_row["total_cost_usd"] == pytest.approx(3.0 * words / 1000.0, rel=1e-12)
    assert grand_row["mean_latency_ms"] == pytest.approx(700.0, abs=1e-9)
    card_vec = catalog.get("grand")
    want = score(card_vec, PreferenceVector(cost=1.0, latency=0.3), 0.0)
    assert grand_row["mean_selection_score"] == pytest.approx(want, abs=1e-9)

    # every workload task type is covered by penny, so the filtered
    # cheapest policy never needs the global-cheapest escape hatch
    cheap_row = report["policies"]["cheapest_passing_filter"]
    assert cheap_row["selections"] == {"penny": 30}
    assert cheap_row["fallback_rate"] == 0.0


def test_evaluate_deterministic():
    catalog = eval_catalog()
    workload = generate_workload(spec_of(n=20))
    policies = ["optiroute", "random"]
    a = evaluate(workload, catalog, policies, policy_seed=2)
    b = evaluate(workload, catalog, policies, policy_seed=2)
    assert report_json(a) == report_json(b)
    c = evaluate(workload, catalog, ["random"], policy_seed=3)
    assert c["policies"]["random"] != a["policies"]["random"]


def test_render_report_layout():
    catalog = eval_catalog()
    workload = generate_workload(spec_of(n=10))
    report = evaluate(workload, catalog, ["optiroute", "always:penny"])
    text = render_report(report)
    lines = text.splitlines()
    assert lines[0].startswith("queries: 10")
    assert sum(1 for ln in lines if ln.startswith("note:")) == 2
    header_idx = next(i for i, ln in enumerate(lines) if ln.startswith("policy"))
    assert "total_cost_usd" in lines[header_idx]
    assert any(ln.startswith("always:penny") for ln in lines)
    assert any(ln.startswith("optiroute") for ln in lines)
    assert any("penny=" in ln for ln in lines)


def test_report_json_round_trips():
    catalog = eval_catalog()
    workload = generate_workload(spec_of(n=5))
    report = evaluate(workload, catalog, ["optiroute"])
    blob = report_json(report)
    assert blob.endswith("\n")
    assert json.loads(blob) == report
