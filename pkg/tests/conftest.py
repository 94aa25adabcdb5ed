from __future__ import annotations

import random
from typing import Optional, Sequence

import pytest

from sgss.labels import (
    HR_DIRECT,
    HR_STATEMENT,
    OF,
    OR,
    OS,
    POOL_REL,
    SF,
    SREL,
    AggregatedScores,
    CriterionTarget,
)
from sgss.model import (
    LEADING,
    DocEntry,
    Overview,
    Query,
    Section,
    Statement,
    StructuredSummary,
)
from sgss.xux import XuxWeights


def build_summary(
    sid: str = "s1",
    qid: str = "q1",
    js: Sequence[int] = (1, 1, 1),
    position: str = LEADING,
    headings: bool = True,
    system_id: str = "sys",
    n_docs: int = 2,
) -> StructuredSummary:
    doclist = tuple(
        DocEntry(citation_number=n, url=f"https://example.com/{n}", title=f"Doc {n}")
        for n in range(1, n_docs + 1)
    )
    citations = frozenset({1}) if n_docs else frozenset()
    sections = tuple(
        Section(
            heading=f"Heading {i}" if headings else "",
            statements=tuple(
                Statement(text=f"Statement {i}.{j}", citations=citations)
                for j in range(1, j_count + 1)
            ),
        )
        for i, j_count in enumerate(js, start=1)
    )
    return StructuredSummary(
        id=sid,
        query_id=qid,
        system_id=system_id,
        overview=Overview(text=f"Overview of {sid}", citations=citations, position=position),
        sections=sections,
        doclist=doclist,
    )


def build_query(qid: str = "q1") -> Query:
    return Query(id=qid, text=f"what is {qid}?")


def scores_for(
    summary: StructuredSummary,
    os: float = 0.0,
    of: float = 0.0,
    or_: float = 0.0,
    hr: Optional[Sequence[float]] = None,
    srel: Optional[Sequence[Sequence[float]]] = None,
    sf: Optional[Sequence[Sequence[float]]] = None,
    comp_abs: Optional[float] = None,
) -> AggregatedScores:
    """Build aggregated scores from per-section values (HR via direct labels)."""
    scores = AggregatedScores()
    scores.put(CriterionTarget(OS, summary.id), os)
    scores.put(CriterionTarget(OF, summary.id), of)
    scores.put(CriterionTarget(OR, summary.id), or_)
    for i, sec in enumerate(summary.sections, start=1):
        if hr is not None:
            scores.put(CriterionTarget(HR_DIRECT, summary.id, i=i), hr[i - 1])
        for j in range(1, len(sec.statements) + 1):
            srel_v = srel[i - 1][j - 1] if srel is not None else 0.0
            sf_v = sf[i - 1][j - 1] if sf is not None else 0.0
            scores.put(CriterionTarget(SREL, summary.id, i=i, j=j), srel_v)
            scores.put(CriterionTarget(SF, summary.id, i=i, j=j), sf_v)
    if comp_abs is not None:
        scores.put(CriterionTarget("CompAbs", summary.id), comp_abs)
    return scores


# --- the three-section, one-statement-each top-heaviness construction -------

ORDERING_WEIGHTS = XuxWeights(w_os=1, w_of=0, w_or=0, w_hr=1, w_srel=1, w_sf=0)


def three_section_summary(sid: str = "a") -> StructuredSummary:
    return build_summary(sid=sid, js=(1, 1, 1))


def three_section_scores(summary: StructuredSummary, section_quality: Sequence[float]) -> AggregatedScores:
    return scores_for(
        summary,
        os=1.0,
        hr=list(section_quality),
        srel=[[q] for q in section_quality],
    )


# --- the two-summary pooling example -----------------------------------------

def pooled_pair_fixture() -> tuple[list[StructuredSummary], AggregatedScores]:
    a = build_summary(sid="a", qid="q1", js=(1, 2), system_id="sysA")
    b = build_summary(sid="b", qid="q1", js=(2,), system_id="sysB")
    scores = AggregatedScores()
    # a is partially relevant to b's only section; b is not relevant to a's
    # first section and partially relevant to a's second.
    scores.put(CriterionTarget(POOL_REL, "a", pooled_section_id="b:1"), 0.5)
    scores.put(CriterionTarget(POOL_REL, "b", pooled_section_id="a:1"), 0.0)
    scores.put(CriterionTarget(POOL_REL, "b", pooled_section_id="a:2"), 0.5)
    return [a, b], scores


# --- randomized instances -----------------------------------------------------

def random_summary(
    rng: random.Random,
    sid: str = "r",
    qid: str = "q",
    i_range: tuple[int, int] = (0, 10),
    j_range: tuple[int, int] = (1, 8),
) -> StructuredSummary:
    js = [rng.randint(*j_range) for _ in range(rng.randint(*i_range))]
    position = rng.choice(["leading", "trailing"])
    return build_summary(sid=sid, qid=qid, js=js, position=position)


def random_scores(rng: random.Random, summaries) -> AggregatedScores:
    if isinstance(summaries, StructuredSummary):
        summaries = [summaries]
    scores = AggregatedScores()
    for summary in summaries:
        for criterion in (OS, OF, OR):
            scores.put(CriterionTarget(criterion, summary.id), rng.random())
        for i, sec in enumerate(summary.sections, start=1):
            for j in range(1, len(sec.statements) + 1):
                scores.put(CriterionTarget(HR_STATEMENT, summary.id, i=i, j=j), rng.random())
                scores.put(CriterionTarget(SREL, summary.id, i=i, j=j), rng.random())
                scores.put(CriterionTarget(SF, summary.id, i=i, j=j), rng.random())
    return scores


def random_weights(rng: random.Random, normalized: bool = False) -> XuxWeights:
    if normalized:
        a, b = sorted([rng.random(), rng.random()])
        overview = (a, b - a, 1 - b)
        srel = rng.random()
        return XuxWeights(
            w_os=overview[0],
            w_of=overview[1],
            w_or=overview[2],
            w_hr=rng.random(),
            w_srel=srel,
            w_sf=(1 - srel) * rng.random(),
            normalized_mode=True,
        )
    return XuxWeights(
        w_os=rng.random() * 2,
        w_of=rng.random() * 2,
        w_or=rng.random() * 2,
        w_hr=rng.random() * 2,
        w_srel=rng.random() * 2,
        w_sf=rng.random() * 2,
    )
