from __future__ import annotations

import itertools
import random

import pytest

from conftest import build_summary, scores_for
from sgss.errors import DataError
from sgss.labels import (
    HR_DIRECT,
    HR_STATEMENT,
    LEFT,
    OS,
    SF,
    SREL,
    AggregatedScores,
    CriterionTarget,
    Grade3,
    GradeMapping,
    LabelRecord,
    LabelStore,
    PreferenceRecord,
    aggregate,
    derive_degraded_labels,
    derive_degraded_records,
    grade_to_score,
    record_from_json,
    record_to_json,
)
from sgss.model import degrade_no_headings, degrade_no_section1


def rec(target, grade, labeller="h1", kind="human", ts=0.0):
    return LabelRecord(labeller, kind, target, grade, ts)


def test_grade_to_score_mapping():
    assert grade_to_score(Grade3.PERFECTLY) == 1.0
    assert grade_to_score(Grade3.PARTIALLY) == 0.5
    assert grade_to_score(Grade3.NO) == 0.0


def test_grade_to_score_monotone():
    scores = [grade_to_score(g) for g in (Grade3.NO, Grade3.PARTIALLY, Grade3.PERFECTLY)]
    assert scores == sorted(scores)
    assert scores[0] < scores[1] < scores[2]


def test_custom_mapping_is_a_knob():
    mapping = GradeMapping(perfectly=1.0, partially=0.3, no=0.0)
    assert grade_to_score(Grade3.PARTIALLY, mapping) == 0.3


def test_grade_parse_aliases():
    assert Grade3.parse("Not relevant") is Grade3.NO
    assert Grade3.parse("perfectly") is Grade3.PERFECTLY
    with pytest.raises(DataError):
        Grade3.parse("maybe")


def test_aggregate_mean():
    target = CriterionTarget(OS, "s1")
    records = [
        rec(target, Grade3.PERFECTLY, labeller="h1"),
        rec(target, Grade3.PARTIALLY, labeller="h2"),
        rec(target, Grade3.NO, labeller="h3"),
    ]
    scores = aggregate(records)
    assert scores.value(target) == pytest.approx(0.5)
    assert scores.count(target) == 3


def test_aggregate_single_labeller():
    target = CriterionTarget(OS, "s1")
    scores = aggregate([rec(target, Grade3.PERFECTLY)])
    assert scores.value(target) == 1.0


def test_aggregate_policy_filters():
    target = CriterionTarget(OS, "s1")
    records = [
        rec(target, Grade3.PERFECTLY, labeller="h1", kind="human"),
        rec(target, Grade3.NO, labeller="m1", kind="llm"),
    ]
    human = aggregate(records, policy="human_only")
    assert human.value(target) == 1.0
    assert human.count(target) == 1
    combined = aggregate(records, policy="combined")
    assert combined.value(target) == 0.5


def test_aggregate_resubmission_replaces():
    target = CriterionTarget(OS, "s1")
    records = [
        rec(target, Grade3.NO, labeller="h1", ts=1.0),
        rec(target, Grade3.PERFECTLY, labeller="h1", ts=2.0),
    ]
    scores = aggregate(records)
    assert scores.value(target) == 1.0
    assert scores.count(target) == 1


def test_aggregate_permutation_invariant_and_bounded():
    rng = random.Random(3)
    target = CriterionTarget(SREL, "s1", i=1, j=1)
    records = [
        rec(target, rng.choice(list(Grade3)), labeller=f"h{k}") for k in range(8)
    ]
    base = aggregate(records).value(target)
    for permutation in itertools.islice(itertools.permutations(records), 10):
        value = aggregate(list(permutation)).value(target)
        assert value == pytest.approx(base)
        assert 0.0 <= value <= 1.0


def test_uncovered_target_error_names_target():
    scores = AggregatedScores()
    with pytest.raises(Exception) as err:
        scores.get(OS, "nope")
    assert "OS(nope)" in str(err.value)


def test_derive_no_headings_zeroes_hr():
    parent = build_summary(js=(2, 1))
    degraded = degrade_no_headings(parent)
    parent_scores = scores_for(parent, os=1.0, hr=[1.0, 1.0], srel=[[1.0, 0.5], [1.0]])
    derived, preference = derive_degraded_labels(parent_scores, parent, degraded)
    assert derived.get(HR_DIRECT, degraded.id, i=1) == 0.0
    assert derived.get(HR_DIRECT, degraded.id, i=2) == 0.0
    assert derived.get(SREL, degraded.id, i=1, j=2) == 0.5
    assert derived.get(OS, degraded.id) == 1.0
    assert preference is not None and preference.choice == LEFT


def test_derive_no_section1_shifts_indices():
    parent = build_summary(js=(1, 1, 1))
    degraded = degrade_no_section1(parent)
    parent_scores = scores_for(parent, os=1.0, hr=[0.5, 1.0, 0.0], srel=[[1.0], [0.5], [0.0]])
    derived, preference = derive_degraded_labels(parent_scores, parent, degraded)
    assert derived.get(SREL, degraded.id, i=1, j=1) == 0.5  # was section 2
    assert derived.get(HR_DIRECT, degraded.id, i=2) == 0.0  # was section 3
    assert not derived.has(CriterionTarget(SREL, degraded.id, i=3, j=1))
    assert preference is not None  # removed statement had SRel 1.0


def test_derive_no_section1_irrelevant_first_section_no_preference():
    parent = build_summary(js=(2, 1))
    degraded = degrade_no_section1(parent)
    parent_scores = scores_for(parent, os=1.0, hr=[1.0, 1.0], srel=[[0.0, 0.0], [1.0]])
    _, preference = derive_degraded_labels(parent_scores, parent, degraded)
    assert preference is None


def test_derive_never_invents_targets():
    parent = build_summary(js=(1, 2))
    degraded = degrade_no_section1(parent)
    parent_scores = scores_for(parent, os=1.0, hr=[1.0, 0.5], srel=[[1.0], [0.5, 0.0]])
    derived, _ = derive_degraded_labels(parent_scores, parent, degraded)
    valid_sections = len(degraded.sections)
    for target, _ in derived.items():
        assert target.summary_id == degraded.id
        if target.i is not None:
            assert 1 <= target.i <= valid_sections


def test_derive_provenance_mismatch():
    parent = build_summary(sid="p", js=(1,))
    other = build_summary(sid="other", js=(1,))
    degraded = degrade_no_headings(other)
    with pytest.raises(DataError):
        derive_degraded_labels(AggregatedScores(), parent, degraded)


def test_derive_degraded_records_matches_aggregate_derivation():
    parent = build_summary(js=(1, 1))
    degraded = degrade_no_section1(parent)
    records = [
        rec(CriterionTarget(OS, parent.id), Grade3.PERFECTLY),
        rec(CriterionTarget("OF", parent.id), Grade3.NO),
        rec(CriterionTarget("OR", parent.id), Grade3.NO),
        rec(CriterionTarget(HR_STATEMENT, parent.id, i=1, j=1), Grade3.PERFECTLY),
        rec(CriterionTarget(HR_STATEMENT, parent.id, i=2, j=1), Grade3.PARTIALLY),
        rec(CriterionTarget(SREL, parent.id, i=1, j=1), Grade3.PERFECTLY),
        rec(CriterionTarget(SREL, parent.id, i=2, j=1), Grade3.PARTIALLY),
        rec(CriterionTarget(SF, parent.id, i=1, j=1), Grade3.NO),
        rec(CriterionTarget(SF, parent.id, i=2, j=1), Grade3.NO),
    ]
    derived_records, preference = derive_degraded_records(records, parent, degraded)
    derived_scores = aggregate(derived_records)
    expected, expected_pref = derive_degraded_labels(aggregate(records), parent, degraded)
    assert {t: v for t, v in derived_scores.items()} == {t: v for t, v in expected.items()}
    assert (preference is None) == (expected_pref is None)


def test_record_json_round_trip():
    label = rec(CriterionTarget(SREL, "s1", i=2, j=1), Grade3.PARTIALLY, ts=3.0)
    assert record_from_json(record_to_json(label)) == label
    pref = PreferenceRecord("h1", "p1", LEFT, ts=4.0)
    assert record_from_json(record_to_json(pref)) == pref


def test_label_store_round_trip(tmp_path):
    path = tmp_path / "labels.jsonl"
    store = LabelStore(str(path))
    label = rec(CriterionTarget(OS, "s1"), Grade3.PERFECTLY)
    pref = PreferenceRecord("h1", "p1", LEFT)
    store.append([label, pref])
    reloaded = LabelStore(str(path))
    assert reloaded.labels() == [label]
    assert reloaded.preferences() == [pref]
