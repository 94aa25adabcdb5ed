"""Round trip of a browser-shaped submission through the service into the CLI.

Uses the frozen fixtures shared with the frontend's own test suite: the pair
payload the service serves and the exact bytes the UI posts for it. Nothing
here requires the UI bundle to be built.
"""
from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from conftest import build_query, pooled_pair_fixture
from sgss.cli import main
from sgss.measure import PreferencePair
from sgss.service import _assigned_swap, create_app
from sgss.workspace import Workspace, read_json, read_labels, write_pairs, write_summaries

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


@pytest.fixture()
def ws(tmp_path):
    ws = Workspace(tmp_path)
    summaries, _ = pooled_pair_fixture()
    write_summaries(ws.summaries_path, [(build_query("q1"), s) for s in summaries])
    write_pairs(ws.pairs_path, [PreferencePair("p1", "q1", "a", "b")])
    return ws


def test_pair_fixture_matches_service(ws):
    with TestClient(create_app(ws)) as tc:
        served = tc.get("/api/pairs/p1", params={"labeller": "ann"}).json()
    frozen = json.loads((FIXTURES / "pair.json").read_text())
    assert served == frozen


def test_ui_submission_round_trip(ws, tmp_path):
    body_bytes = (FIXTURES / "submission.json").read_text()
    with TestClient(create_app(ws)) as tc:
        response = tc.post(
            "/api/pairs/p1/labels",
            content=body_bytes,
            headers={"Content-Type": "application/json"},
        )
        assert response.status_code == 200
        assert response.json()["status"] == "complete"

    # Stored records parse through the same reader the CLI uses.
    labels, preferences = read_labels(ws.labels_path)
    body = json.loads(body_bytes)
    assert len(labels) == len(body["labels"])
    assert len(preferences) == 1
    # Preference "A" de-blinds against the recorded side assignment.
    expected = "RIGHT" if _assigned_swap("ann", "p1") else "LEFT"
    assert preferences[0].choice == expected

    # The completed pair scores without touching the stored records.
    assert main([
        "--workspace", str(ws.root),
        "score", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "reports.json",
    ]) == 0
    reports = read_json(ws.path("reports.json"))
    assert {r["summary_id"] for r in reports} == {"a", "b"}
    assert all(0.0 <= r["xux"] for r in reports)

    # Pool relevance comes from the labelling harness; UI labels are untouched.
    assert main([
        "--workspace", str(ws.root),
        "label-llm", "--summaries", "summaries.jsonl", "--pool", "--mock",
        "--out-labels", "pool_labels.jsonl",
    ]) == 0
    merged = ws.path("labels.jsonl").read_text() + ws.path("pool_labels.jsonl").read_text()
    ws.path("all_labels.jsonl").write_text(merged)
    assert main([
        "--workspace", str(ws.root),
        "comp", "--summaries", "summaries.jsonl", "--labels", "all_labels.jsonl",
        "--out", "comps.json",
    ]) == 0
    comps = read_json(ws.path("comps.json"))[0]["comp"]
    assert set(comps) == {"a", "b"}
    assert all(0.0 <= v <= 1.0 for v in comps.values())
