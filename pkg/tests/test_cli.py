from __future__ import annotations

import json

import pytest

from conftest import build_query, build_summary, three_section_scores, three_section_summary, pooled_pair_fixture
from sgss.cli import main
from sgss.labels import HUMAN, LabelRecord, Grade3
from sgss.workspace import (
    Workspace,
    read_json,
    read_labels,
    read_pairs,
    write_labels,
    write_pairs,
    write_summaries,
)
from sgss.measure import PreferencePair


GRADE_OF = {1.0: "Perfectly", 0.5: "Partially", 0.0: "No"}


def labels_from_scores(scores):
    return [
        LabelRecord("h", HUMAN, t, Grade3.parse(GRADE_OF[v]), ts=float(k))
        for k, (t, v) in enumerate(scores.items())
    ]


@pytest.fixture()
def ws(tmp_path):
    return Workspace(tmp_path)


def seed_three_sections(ws, quality=(1.0, 1.0, 0.0)):
    summary = three_section_summary()
    write_summaries(ws.summaries_path, [(build_query("q"), summary)])
    write_labels(ws.path("labels.jsonl"), labels_from_scores(three_section_scores(summary, quality)))
    return summary


def run(ws, *argv):
    return main(["--workspace", str(ws.root), *argv])


def test_score_command(ws, tmp_path):
    seed_three_sections(ws)
    weights = {
        "w_os": 1, "w_of": 0, "w_or": 0, "w_hr": 1, "w_srel": 1, "w_sf": 0,
        "w_comp": 0, "normalized_mode": False,
    }
    (tmp_path / "weights.json").write_text(json.dumps(weights))
    code = run(
        ws, "score", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--weights", "weights.json", "--out", "reports.json",
    )
    assert code == 0
    reports = read_json(ws.path("reports.json"))
    assert len(reports) == 1
    assert reports[0]["summary_id"] == "a"
    assert reports[0]["xux"] == pytest.approx(0.935374, abs=1e-4)
    assert reports[0]["x_prime"] == [1, 2, 3, 4, 5, 5, 5]


def test_score_missing_labels_exits_2(ws, capsys):
    summary = three_section_summary()
    write_summaries(ws.summaries_path, [(build_query("q"), summary)])
    scores = three_section_scores(summary, (1.0, 1.0, 0.0))
    write_labels(ws.path("labels.jsonl"), labels_from_scores(scores)[:-2])
    code = run(
        ws, "score", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "reports.json",
    )
    assert code == 2
    assert "missing label" in capsys.readouterr().err


def test_score_missing_file_exits_2(ws, capsys):
    code = run(
        ws, "score", "--summaries", "absent.jsonl", "--labels", "labels.jsonl",
        "--out", "reports.json",
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_comp_command(ws):
    summaries, pool_scores = pooled_pair_fixture()
    query = build_query("q1")
    write_summaries(ws.summaries_path, [(query, s) for s in summaries])
    write_labels(ws.path("labels.jsonl"), labels_from_scores(pool_scores))
    code = run(
        ws, "comp", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "comps.json",
    )
    assert code == 0
    reports = read_json(ws.path("comps.json"))
    assert reports[0]["comp"]["a"] == pytest.approx(0.983, abs=1e-3)
    assert reports[0]["comp"]["b"] == pytest.approx(0.792, abs=1e-3)


def test_comp_single_summary_exits_2(ws, capsys):
    write_summaries(ws.summaries_path, [(build_query("q"), three_section_summary())])
    write_labels(ws.path("labels.jsonl"), [])
    code = run(
        ws, "comp", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "comps.json",
    )
    assert code == 2
    assert "N > 1" in capsys.readouterr().err


def test_pool_command(ws):
    summaries, _ = pooled_pair_fixture()
    write_summaries(ws.summaries_path, [(build_query("q1"), s) for s in summaries])
    code = run(ws, "pool", "--summaries", "summaries.jsonl", "--out", "pool.json")
    assert code == 0
    skeleton = read_json(ws.path("pool.json"))[0]
    assert [s["id"] for s in skeleton["pooled_sections"]] == ["a:1", "a:2", "b:1"]
    assert {(t["summary_id"], t["pooled_section_id"]) for t in skeleton["targets_to_label"]} == {
        ("a", "b:1"), ("b", "a:1"), ("b", "a:2"),
    }


def test_degrade_command(ws):
    seed_three_sections(ws)
    code = run(
        ws, "degrade", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--strategy", "noheadings", "--out-summaries", "deg.jsonl",
        "--out-labels", "deg_labels.jsonl", "--out-pairs", "deg_pairs.jsonl",
    )
    assert code == 0
    pairs = read_pairs(ws.path("deg_pairs.jsonl"))
    assert len(pairs) == 1
    assert pairs[0].origin == "derived_degradation"
    assert pairs[0].left_id == "a" and pairs[0].right_id == "a#noheadings"
    labels, prefs = read_labels(ws.path("deg_labels.jsonl"))
    assert all(l.target.summary_id == "a#noheadings" for l in labels)
    assert prefs[0].choice == "LEFT"
    # Headings are gone, so every heading-representativeness grade is No.
    hr = [l for l in labels if l.target.criterion.startswith("HR")]
    assert hr and all(l.grade is Grade3.NO for l in hr)


def test_label_llm_mock_deterministic(ws, tmp_path):
    summaries, _ = pooled_pair_fixture()
    query = build_query("q1")
    write_summaries(ws.summaries_path, [(query, s) for s in summaries])
    write_pairs(ws.pairs_path, [PreferencePair("p1", "q1", "a", "b")])
    for out in ("one.jsonl", "two.jsonl"):
        code = run(
            ws, "label-llm", "--summaries", "summaries.jsonl", "--pairs", "pairs.jsonl",
            "--pool", "--mock", "--out-labels", out, "--transcripts", f"{out}.log",
        )
        assert code == 0
    assert ws.path("one.jsonl").read_bytes() == ws.path("two.jsonl").read_bytes()
    labels, prefs = read_labels(ws.path("one.jsonl"))
    criteria = {l.target.criterion for l in labels}
    assert "PoolRel" in criteria and "OS" in criteria
    assert len(prefs) == 1 and prefs[0].pair_id == "p1"
    assert ws.path("one.jsonl.log").read_text().strip()


def fit_fixture(ws):
    """Two queries, clear quality gap, unanimous preferences for the better side."""
    items, pairs, records = [], [], []
    k = 0
    for qid in ("q1", "q2"):
        query = build_query(qid)
        good = build_summary(sid=f"good-{qid}", qid=qid, js=(1, 1, 1))
        bad = build_summary(sid=f"bad-{qid}", qid=qid, js=(1, 1, 1))
        items += [(query, good), (query, bad)]
        records += labels_from_scores(three_section_scores(good, (1.0, 1.0, 1.0)))
        records += labels_from_scores(three_section_scores(bad, (0.0, 0.0, 0.0)))
        from sgss.labels import PreferenceRecord

        prefs = tuple(
            PreferenceRecord(f"h{h}", f"p-{qid}", "LEFT", ts=float(k + h)) for h in range(3)
        )
        pairs.append(PreferencePair(f"p-{qid}", qid, good.id, bad.id, preferences=prefs))
        k += 3
    write_summaries(ws.summaries_path, items)
    write_labels(ws.path("labels.jsonl"), records)
    write_pairs(ws.pairs_path, pairs)


def test_fit_and_evaluate_commands(ws, capsys):
    fit_fixture(ws)
    code = run(
        ws, "fit", "--pairs", "pairs.jsonl", "--summaries", "summaries.jsonl",
        "--labels", "labels.jsonl", "--out", "weights.json",
    )
    assert code == 0
    weights = read_json(ws.path("weights.json"))
    assert weights["fit"]["converged"] is True
    assert all(weights[f"w_{n}"] >= 0 for n in ("os", "of", "or", "hr", "srel", "sf", "comp"))

    code = run(
        ws, "evaluate", "--pairs", "pairs.jsonl", "--summaries", "summaries.jsonl",
        "--labels", "labels.jsonl", "--weights", "weights.json", "--out", "eval.json",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "MAR 1.0000 over 2 pairs (0 ties)" in out
    report = read_json(ws.path("eval.json"))
    assert report["mar"] == 1.0


def test_fit_mask_zeroes_features(ws):
    fit_fixture(ws)
    code = run(
        ws, "fit", "--pairs", "pairs.jsonl", "--summaries", "summaries.jsonl",
        "--labels", "labels.jsonl", "--mask", "hr,srel", "--out", "weights.json",
    )
    assert code == 0
    weights = read_json(ws.path("weights.json"))
    assert weights["w_os"] == 0.0 and weights["w_comp"] == 0.0
    assert weights["w_hr"] > 0


def test_fit_without_preferences_exits_2(ws, capsys):
    seed_three_sections(ws)
    write_pairs(ws.pairs_path, [])
    code = run(
        ws, "fit", "--pairs", "pairs.jsonl", "--summaries", "summaries.jsonl",
        "--labels", "labels.jsonl", "--out", "weights.json",
    )
    assert code == 2


def test_plot_data_command(ws):
    seed_three_sections(ws)
    run(
        ws, "score", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "reports.json",
    )
    comps = {"a": 0.9}
    ws.path("comps.json").write_text(json.dumps(comps))
    code = run(
        ws, "plot-data", "--reports", "reports.json", "--comps", "comps.json",
        "--out", "plot.csv",
    )
    assert code == 0
    lines = ws.path("plot.csv").read_text().splitlines()
    assert lines[0] == "summary_id,query_id,xux,comp,sgss"
    sid, qid, xux, comp, sgss = lines[1].split(",")
    assert (sid, qid) == ("a", "q")
    assert float(sgss) == pytest.approx(float(xux) + 0.9)


def test_plot_data_missing_comp_exits_2(ws, capsys):
    seed_three_sections(ws)
    run(
        ws, "score", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "reports.json",
    )
    ws.path("comps.json").write_text(json.dumps({"zzz": 0.5}))
    code = run(
        ws, "plot-data", "--reports", "reports.json", "--comps", "comps.json",
        "--out", "plot.csv",
    )
    assert code == 2
    assert "no comp value" in capsys.readouterr().err


def test_lmax_flags(ws):
    seed_three_sections(ws)
    code = run(
        ws, "score", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "reports.json", "--lmax", "3",
    )
    assert code == 0
    report = read_json(ws.path("reports.json"))[0]
    assert report["L_prime"] == 3
    # The reading model needs an average line length to resolve a cap.
    code = run(
        ws, "score", "--summaries", "summaries.jsonl", "--labels", "labels.jsonl",
        "--out", "reports.json", "--lmax-minutes", "2",
    )
    assert code == 2
