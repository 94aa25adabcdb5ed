"""Section pooling and comprehensiveness scoring.

Sections from all summaries answering one query are pooled; each summary is
graded against every pooled section, the graded row is normalized to a
probability mass function, and comprehensiveness is one minus the base-2
Jensen-Shannon divergence from the uniform distribution over the pool.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import DataError, UncoveredTargetError
from .labels import POOL_REL, AggregatedScores, CriterionTarget
from .model import StructuredSummary

AUTO_OWN = "auto_own"
LABELLED = "labelled"


@dataclass(frozen=True)
class PooledSection:
    id: str
    source_summary_id: str
    source_index: int  # 1-based position in the source summary
    heading: str
    statements: tuple[str, ...]


@dataclass
class PoolRelevanceMatrix:
    query_id: str
    summary_ids: list[str]
    pooled: list[PooledSection]
    # (summary_id, pooled_id) -> (score, provenance); None score = unlabelled
    cells: dict[tuple[str, str], tuple[Optional[float], str]] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.pooled)

    def unlabelled_cells(self) -> list[tuple[str, str]]:
        return [key for key, (score, _) in sorted(self.cells.items()) if score is None]

    def row(self, summary_id: str) -> list[float]:
        out = []
        for sec in self.pooled:
            score, _ = self.cells[(summary_id, sec.id)]
            if score is None:
                raise UncoveredTargetError(
                    [CriterionTarget(POOL_REL, summary_id, pooled_section_id=sec.id)]
                )
            out.append(score)
        return out


def pooled_section_id(summary_id: str, index: int) -> str:
    return f"{summary_id}:{index}"


def build_pool(summaries: Sequence[StructuredSummary]) -> PoolRelevanceMatrix:
    """Pool all sections; each summary's own sections are perfectly relevant.

    Near-duplicate sections from different summaries stay distinct pool
    entries; cross-labelling handles their overlap.
    """
    if len(summaries) <= 1:
        raise DataError(f"pooling requires N > 1 summaries, got {len(summaries)}")
    query_ids = {s.query_id for s in summaries}
    if len(query_ids) != 1:
        raise DataError(f"pooled summaries must share one query, got {sorted(query_ids)}")
    for s in summaries:
        if not s.sections:
            raise DataError(f"summary {s.id} has no sections and cannot join the pool")

    pooled: list[PooledSection] = []
    for s in summaries:
        for i, sec in enumerate(s.sections, start=1):
            pooled.append(
                PooledSection(
                    id=pooled_section_id(s.id, i),
                    source_summary_id=s.id,
                    source_index=i,
                    heading=sec.heading,
                    statements=tuple(st.text for st in sec.statements),
                )
            )
    matrix = PoolRelevanceMatrix(
        query_id=next(iter(query_ids)),
        summary_ids=[s.id for s in summaries],
        pooled=pooled,
    )
    for s in summaries:
        for sec in pooled:
            own = sec.source_summary_id == s.id
            matrix.cells[(s.id, sec.id)] = (1.0, AUTO_OWN) if own else (None, "")
    return matrix


def fill_matrix(matrix: PoolRelevanceMatrix, scores: AggregatedScores) -> PoolRelevanceMatrix:
    """Fill non-own cells from aggregated pooled-relevance scores."""
    for (sid, pid), (score, provenance) in matrix.cells.items():
        if provenance == AUTO_OWN:
            continue
        target = CriterionTarget(POOL_REL, sid, pooled_section_id=pid)
        if scores.has(target):
            matrix.cells[(sid, pid)] = (scores.value(target), LABELLED)
    return matrix


def to_pmf(row: Sequence[float]) -> list[float]:
    total = sum(row)
    if total <= 0:
        raise DataError("cannot normalize an all-zero relevance row")
    if any(g < 0 for g in row):
        raise DataError("relevance scores must be non-negative")
    return [g / total for g in row]


def jsd(p: Sequence[float], q: Sequence[float]) -> float:
    """Base-2 Jensen-Shannon divergence; 0*log(0/x) is taken as 0."""
    if len(p) != len(q):
        raise DataError(f"distribution length mismatch: {len(p)} vs {len(q)}")

    def _kl_to_mixture(a: Sequence[float], b: Sequence[float]) -> float:
        total = 0.0
        for ai, bi in zip(a, b):
            if ai > 0:
                m = (ai + bi) / 2
                total += ai * math.log2(ai / m)
        return total

    return 0.5 * _kl_to_mixture(p, q) + 0.5 * _kl_to_mixture(q, p)


def comprehensiveness(row_pmf: Sequence[float], k: Optional[int] = None) -> float:
    """One minus the divergence from the uniform gold distribution."""
    k = len(row_pmf) if k is None else k
    if k < 2:
        raise DataError(f"comprehensiveness needs a pool of K >= 2 sections, got {k}")
    if len(row_pmf) != k:
        raise DataError(f"pmf has {len(row_pmf)} entries but K = {k}")
    uniform = [1.0 / k] * k
    return 1.0 - jsd(row_pmf, uniform)


@dataclass(frozen=True)
class CompReport:
    query_id: str
    matrix: PoolRelevanceMatrix
    comp: dict[str, float]  # summary_id -> Comp, in input order

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "pooled_sections": [
                {
                    "id": sec.id,
                    "source_summary": sec.source_summary_id,
                    "i": sec.source_index,
                    "heading": sec.heading,
                }
                for sec in self.matrix.pooled
            ],
            "matrix": [
                {
                    "summary_id": sid,
                    "cells": [
                        {
                            "pooled_id": sec.id,
                            "score": self.matrix.cells[(sid, sec.id)][0],
                            "provenance": self.matrix.cells[(sid, sec.id)][1],
                        }
                        for sec in self.matrix.pooled
                    ],
                }
                for sid in self.matrix.summary_ids
            ],
            "comp": dict(self.comp),
        }


def comp_report(
    summaries: Sequence[StructuredSummary], scores: AggregatedScores
) -> CompReport:
    matrix = fill_matrix(build_pool(summaries), scores)
    missing = matrix.unlabelled_cells()
    if missing:
        raise UncoveredTargetError(
            [CriterionTarget(POOL_REL, sid, pooled_section_id=pid) for sid, pid in missing]
        )
    comp = {
        sid: comprehensiveness(to_pmf(matrix.row(sid)), matrix.k)
        for sid in matrix.summary_ids
    }
    return CompReport(query_id=matrix.query_id, matrix=matrix, comp=comp)
