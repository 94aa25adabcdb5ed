"""3-point label vocabulary, score mapping, aggregation, and degradation labels."""
from __future__ import annotations

import enum
import json
import os
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import DataError, UncoveredTargetError
from .model import NO_HEADINGS, NO_SECTION1, StructuredSummary

HUMAN = "human"
LLM = "llm"

LEFT = "LEFT"
RIGHT = "RIGHT"

OS = "OS"
OF = "OF"
OR = "OR"
HR_DIRECT = "HRdirect"
HR_STATEMENT = "HRstatement"
SREL = "SRel"
SF = "SF"
COMP_ABS = "CompAbs"
POOL_REL = "PoolRel"
PREFERENCE = "Pref"

CRITERIA = (OS, OF, OR, HR_DIRECT, HR_STATEMENT, SREL, SF, COMP_ABS, POOL_REL)


class Grade3(enum.Enum):
    PERFECTLY = "Perfectly"
    PARTIALLY = "Partially"
    NO = "No"

    @classmethod
    def parse(cls, value: str) -> "Grade3":
        normalized = value.strip().lower()
        if normalized in ("no", "not relevant", "not"):
            return cls.NO
        for grade in cls:
            if normalized == grade.value.lower():
                return grade
        raise DataError(f"unknown grade {value!r}")


@dataclass(frozen=True)
class GradeMapping:
    """Scores assigned to the three grades."""

    perfectly: float = 1.0
    partially: float = 0.5
    no: float = 0.0

    def score(self, grade: Grade3) -> float:
        return {
            Grade3.PERFECTLY: self.perfectly,
            Grade3.PARTIALLY: self.partially,
            Grade3.NO: self.no,
        }[grade]


DEFAULT_MAPPING = GradeMapping()


def grade_to_score(grade: Grade3, mapping: GradeMapping = DEFAULT_MAPPING) -> float:
    return mapping.score(grade)


@dataclass(frozen=True)
class CriterionTarget:
    criterion: str
    summary_id: str
    i: Optional[int] = None
    j: Optional[int] = None
    pooled_section_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.criterion not in CRITERIA:
            raise DataError(f"unknown criterion {self.criterion!r}")

    def __str__(self) -> str:
        coords = "".join(
            f"/{part}" for part in (self.i, self.j, self.pooled_section_id) if part is not None
        )
        return f"{self.criterion}({self.summary_id}{coords})"


@dataclass(frozen=True)
class LabelRecord:
    labeller_id: str
    labeller_kind: str
    target: CriterionTarget
    grade: Grade3
    ts: float = 0.0


@dataclass(frozen=True)
class PreferenceRecord:
    labeller_id: str
    pair_id: str
    choice: str  # LEFT or RIGHT
    labeller_kind: str = HUMAN
    ts: float = 0.0

    def __post_init__(self) -> None:
        if self.choice not in (LEFT, RIGHT):
            raise DataError(f"preference choice must be LEFT or RIGHT, got {self.choice!r}")


class AggregatedScores:
    """Per-target mean scores in [0,1] with labeller counts."""

    def __init__(
        self,
        scores: Optional[dict[CriterionTarget, float]] = None,
        counts: Optional[dict[CriterionTarget, int]] = None,
    ) -> None:
        self._scores: dict[CriterionTarget, float] = dict(scores or {})
        self._counts: dict[CriterionTarget, int] = dict(counts or {})
        for target, value in self._scores.items():
            if not 0.0 <= value <= 1.0:
                raise DataError(f"score for {target} out of [0,1]: {value}")
            self._counts.setdefault(target, 1)

    def put(self, target: CriterionTarget, score: float, count: int = 1) -> None:
        if not 0.0 <= score <= 1.0:
            raise DataError(f"score for {target} out of [0,1]: {score}")
        self._scores[target] = score
        self._counts[target] = count

    def has(self, target: CriterionTarget) -> bool:
        return target in self._scores

    def value(self, target: CriterionTarget) -> float:
        try:
            return self._scores[target]
        except KeyError:
            raise UncoveredTargetError([target]) from None

    def get(
        self,
        criterion: str,
        summary_id: str,
        i: Optional[int] = None,
        j: Optional[int] = None,
        pooled_section_id: Optional[str] = None,
    ) -> float:
        return self.value(CriterionTarget(criterion, summary_id, i, j, pooled_section_id))

    def count(self, target: CriterionTarget) -> int:
        return self._counts.get(target, 0)

    def items(self) -> list[tuple[CriterionTarget, float]]:
        return list(self._scores.items())

    def targets(self) -> set[CriterionTarget]:
        return set(self._scores)

    def missing(self, required: Iterable[CriterionTarget]) -> list[CriterionTarget]:
        return [t for t in required if t not in self._scores]


def aggregate(
    records: Iterable[LabelRecord],
    policy: str = "combined",
    mapping: GradeMapping = DEFAULT_MAPPING,
) -> AggregatedScores:
    """Mean mapped score per target under a labeller-kind filter.

    Re-submissions by the same labeller replace the earlier record
    (last write wins by timestamp, then by arrival order).
    """
    if policy not in ("human_only", "llm_only", "combined"):
        raise DataError(f"unknown aggregation policy {policy!r}")
    latest: dict[tuple[str, CriterionTarget], tuple[float, int, LabelRecord]] = {}
    for order, rec in enumerate(records):
        if policy == "human_only" and rec.labeller_kind != HUMAN:
            continue
        if policy == "llm_only" and rec.labeller_kind != LLM:
            continue
        key = (rec.labeller_id, rec.target)
        prior = latest.get(key)
        if prior is None or (rec.ts, order) >= (prior[0], prior[1]):
            latest[key] = (rec.ts, order, rec)

    by_target: dict[CriterionTarget, list[float]] = {}
    for (_, target), (_, _, rec) in latest.items():
        by_target.setdefault(target, []).append(mapping.score(rec.grade))
    scores = {t: sum(vals) / len(vals) for t, vals in by_target.items()}
    counts = {t: len(vals) for t, vals in by_target.items()}
    return AggregatedScores(scores, counts)


def checklist_targets(summary: StructuredSummary) -> list[CriterionTarget]:
    """All absolute-label targets one labeller must cover for one summary."""
    sid = summary.id
    targets = [
        CriterionTarget(OS, sid),
        CriterionTarget(OF, sid),
        CriterionTarget(OR, sid),
        CriterionTarget(COMP_ABS, sid),
    ]
    for i, sec in enumerate(summary.sections, start=1):
        if sec.heading:
            targets.append(CriterionTarget(HR_DIRECT, sid, i=i))
        for j in range(1, len(sec.statements) + 1):
            targets.append(CriterionTarget(SREL, sid, i=i, j=j))
            targets.append(CriterionTarget(SF, sid, i=i, j=j))
    return targets


def derive_degraded_labels(
    parent_scores: AggregatedScores,
    parent: StructuredSummary,
    degraded: StructuredSummary,
) -> tuple[AggregatedScores, Optional[PreferenceRecord]]:
    """Copy the parent's aggregated scores onto a degraded summary.

    Heading removal zeroes every heading-representativeness target; first-
    section removal shifts section coordinates down by one. A synthetic
    "parent preferred" record is emitted unless the removed section held no
    relevant statement.
    """
    if degraded.provenance is None or degraded.provenance.parent_id != parent.id:
        raise DataError(
            f"degraded summary {degraded.id} does not name {parent.id} as its parent"
        )
    strategy = degraded.provenance.strategy
    out = AggregatedScores()
    for target, score in parent_scores.items():
        if target.summary_id != parent.id:
            continue
        count = parent_scores.count(target)
        if strategy == NO_HEADINGS:
            if target.criterion in (HR_DIRECT, HR_STATEMENT):
                score = 0.0
            out.put(
                CriterionTarget(target.criterion, degraded.id, target.i, target.j,
                                target.pooled_section_id),
                score,
                count,
            )
        elif strategy == NO_SECTION1:
            if target.i is not None:
                if target.i == 1:
                    continue
                out.put(
                    CriterionTarget(target.criterion, degraded.id, target.i - 1, target.j,
                                    target.pooled_section_id),
                    score,
                    count,
                )
            else:
                out.put(
                    CriterionTarget(target.criterion, degraded.id, None, None,
                                    target.pooled_section_id),
                    score,
                    count,
                )
        else:
            raise DataError(f"unknown degradation strategy {strategy!r}")

    preference: Optional[PreferenceRecord] = None
    emit = True
    if strategy == NO_SECTION1:
        removed = parent.sections[0]
        emit = any(
            parent_scores.has(CriterionTarget(SREL, parent.id, i=1, j=j))
            and parent_scores.get(SREL, parent.id, i=1, j=j) > 0.0
            for j in range(1, len(removed.statements) + 1)
        )
    if emit:
        preference = PreferenceRecord(
            labeller_id="derived",
            pair_id=f"{parent.id}|{degraded.id}",
            choice=LEFT,
        )
    return out, preference


def derive_degraded_records(
    parent_records: Iterable[LabelRecord],
    parent: StructuredSummary,
    degraded: StructuredSummary,
    mapping: GradeMapping = DEFAULT_MAPPING,
) -> tuple[list[LabelRecord], Optional[PreferenceRecord]]:
    """Record-level counterpart of derive_degraded_labels.

    Each labeller's raw grades are re-targeted at the degraded summary so a
    plain label file can carry them; aggregating the output reproduces the
    aggregate-level derivation.
    """
    if degraded.provenance is None or degraded.provenance.parent_id != parent.id:
        raise DataError(
            f"degraded summary {degraded.id} does not name {parent.id} as its parent"
        )
    strategy = degraded.provenance.strategy
    out: list[LabelRecord] = []
    parent_records = [r for r in parent_records if r.target.summary_id == parent.id]
    for rec in parent_records:
        target = rec.target
        grade = rec.grade
        if strategy == NO_HEADINGS:
            if target.criterion in (HR_DIRECT, HR_STATEMENT):
                grade = Grade3.NO
            new_target = CriterionTarget(
                target.criterion, degraded.id, target.i, target.j, target.pooled_section_id
            )
        elif strategy == NO_SECTION1:
            if target.i is not None:
                if target.i == 1:
                    continue
                new_target = CriterionTarget(
                    target.criterion, degraded.id, target.i - 1, target.j,
                    target.pooled_section_id,
                )
            else:
                new_target = CriterionTarget(
                    target.criterion, degraded.id, None, None, target.pooled_section_id
                )
        else:
            raise DataError(f"unknown degradation strategy {strategy!r}")
        out.append(LabelRecord(rec.labeller_id, rec.labeller_kind, new_target, grade, rec.ts))

    parent_scores = aggregate(parent_records, policy="combined", mapping=mapping)
    _, preference = derive_degraded_labels(parent_scores, parent, degraded)
    return out, preference


# --- label file interchange (newline-delimited JSON) ------------------------

def record_to_json(record: LabelRecord | PreferenceRecord) -> dict:
    if isinstance(record, LabelRecord):
        target: dict = {"criterion": record.target.criterion, "summary_id": record.target.summary_id}
        if record.target.i is not None:
            target["i"] = record.target.i
        if record.target.j is not None:
            target["j"] = record.target.j
        if record.target.pooled_section_id is not None:
            target["pooled_section_id"] = record.target.pooled_section_id
        return {
            "labeller_id": record.labeller_id,
            "kind": record.labeller_kind,
            "target": target,
            "grade": record.grade.value,
            "ts": record.ts,
        }
    return {
        "labeller_id": record.labeller_id,
        "kind": record.labeller_kind,
        "target": {"criterion": PREFERENCE, "pair_id": record.pair_id},
        "choice": record.choice,
        "ts": record.ts,
    }


def record_from_json(doc: dict) -> LabelRecord | PreferenceRecord:
    try:
        target = doc["target"]
        if target["criterion"] == PREFERENCE:
            return PreferenceRecord(
                labeller_id=doc["labeller_id"],
                pair_id=target["pair_id"],
                choice=doc["choice"],
                labeller_kind=doc.get("kind", HUMAN),
                ts=doc.get("ts", 0.0),
            )
        return LabelRecord(
            labeller_id=doc["labeller_id"],
            labeller_kind=doc.get("kind", HUMAN),
            target=CriterionTarget(
                criterion=target["criterion"],
                summary_id=target["summary_id"],
                i=target.get("i"),
                j=target.get("j"),
                pooled_section_id=target.get("pooled_section_id"),
            ),
            grade=Grade3.parse(doc["grade"]),
            ts=doc.get("ts", 0.0),
        )
    except KeyError as exc:
        raise DataError(f"label record is missing field {exc}") from exc


class LabelStore:
    """Append-only label log with atomic per-record writes."""

    def __init__(self, path: Optional[str] = None) -> None:
        self.path = path
        self._lock = threading.Lock()
        self._records: list[LabelRecord | PreferenceRecord] = []
        if path is not None and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._records.append(record_from_json(json.loads(line)))

    def append(self, records: Iterable[LabelRecord | PreferenceRecord]) -> None:
        records = list(records)
        with self._lock:
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    for rec in records:
                        fh.write(json.dumps(record_to_json(rec), sort_keys=True) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            self._records.extend(records)

    def snapshot(self) -> list[LabelRecord | PreferenceRecord]:
        with self._lock:
            return list(self._records)

    def labels(self) -> list[LabelRecord]:
        return [r for r in self.snapshot() if isinstance(r, LabelRecord)]

    def preferences(self) -> list[PreferenceRecord]:
        return [r for r in self.snapshot() if isinstance(r, PreferenceRecord)]
