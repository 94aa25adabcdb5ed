"""Expected user experience scoring over summary lines.

The per-line score X(l) = X'(l)/l divides the cumulative quality of
everything read so far by the reading position, which rewards putting good
content early. XUX is the mean of X(l) under a uniform abandonment
distribution over the (possibly truncated) lines; variants take section-final
lines only or an arbitrary abandonment distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import DataError, UncoveredTargetError
from .labels import (
    HR_DIRECT,
    HR_STATEMENT,
    OF,
    OR,
    OS,
    SF,
    SREL,
    AggregatedScores,
    CriterionTarget,
)
from .model import (
    HEADING,
    OVERVIEW,
    STATEMENT,
    Line,
    StructuredSummary,
    enumerate_lines,
    truncate_lines,
)

PHI_CRITERIA = ("os", "of", "or", "hr", "srel", "sf")


@dataclass(frozen=True)
class XuxWeights:
    w_os: float = 1 / 3
    w_of: float = 1 / 3
    w_or: float = 1 / 3
    w_hr: float = 1.0
    w_srel: float = 0.5
    w_sf: float = 0.5
    normalized_mode: bool = False

    def __post_init__(self) -> None:
        values = (self.w_os, self.w_of, self.w_or, self.w_hr, self.w_srel, self.w_sf)
        if any(w < 0 for w in values):
            raise DataError(f"weights must be non-negative: {values}")
        if self.normalized_mode:
            # Each line may then contribute at most 1 to X'(l), so XUX <= 1.
            if self.w_os + self.w_of + self.w_or > 1 + 1e-12:
                raise DataError("normalized mode requires w_os + w_of + w_or <= 1")
            if self.w_hr > 1 + 1e-12:
                raise DataError("normalized mode requires w_hr <= 1")
            if self.w_srel + self.w_sf > 1 + 1e-12:
                raise DataError("normalized mode requires w_srel + w_sf <= 1")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.w_os, self.w_of, self.w_or, self.w_hr, self.w_srel, self.w_sf)


@dataclass(frozen=True)
class Apd:
    """Abandonment probability distribution over line indices 1..L'."""

    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probabilities):
            raise DataError("APD probabilities must be non-negative")
        total = sum(self.probabilities)
        if abs(total - 1.0) > 1e-9:
            raise DataError(f"APD must sum to 1, got {total}")

    @classmethod
    def uniform(cls, n: int) -> "Apd":
        return cls(tuple(1.0 / n for _ in range(n)))

    @classmethod
    def point_mass(cls, n: int, at: int) -> "Apd":
        return cls(tuple(1.0 if l == at else 0.0 for l in range(1, n + 1)))


UNBOUNDED = "unbounded"
FIXED = "fixed"
READING_MODEL = "reading_model"


@dataclass(frozen=True)
class LmaxConfig:
    mode: str = UNBOUNDED
    l_max: Optional[int] = None
    minutes: Optional[float] = None
    chars_per_minute: float = 500.0
    avlen: Optional[float] = None

    @classmethod
    def unbounded(cls) -> "LmaxConfig":
        return cls()

    @classmethod
    def fixed(cls, l_max: int) -> "LmaxConfig":
        if l_max < 1:
            raise DataError(f"fixed L_max must be >= 1, got {l_max}")
        return cls(mode=FIXED, l_max=l_max)

    @classmethod
    def reading_model(cls, minutes: float, avlen: float, chars_per_minute: float = 500.0) -> "LmaxConfig":
        return cls(mode=READING_MODEL, minutes=minutes, avlen=avlen,
                   chars_per_minute=chars_per_minute)

    def resolve(self) -> Optional[int]:
        if self.mode == UNBOUNDED:
            return None
        if self.mode == FIXED:
            if self.l_max is None or self.l_max < 1:
                raise DataError("fixed mode requires l_max >= 1")
            return self.l_max
        if self.mode == READING_MODEL:
            return estimate_lmax(self)
        raise DataError(f"unknown L_max mode {self.mode!r}")


def estimate_lmax(cfg: LmaxConfig) -> int:
    """Reading-budget line cap: round(rate * minutes / average line length)."""
    if cfg.mode != READING_MODEL:
        raise DataError("estimate_lmax requires reading_model mode")
    if cfg.avlen is None or cfg.avlen <= 0:
        raise DataError(f"avlen must be positive, got {cfg.avlen}")
    if cfg.minutes is None or cfg.minutes <= 0:
        raise DataError(f"minutes must be positive, got {cfg.minutes}")
    # Round half up, floored at one line.
    return max(1, math.floor(cfg.chars_per_minute * cfg.minutes / cfg.avlen + 0.5))


@dataclass(frozen=True)
class XuxReport:
    L: int
    L_prime: int
    x_prime: tuple[float, ...]
    x: tuple[float, ...]
    xux: float
    xux_f: float
    phi: dict[str, float]
    xux_g: Optional[float] = None

    def to_dict(self) -> dict:
        doc = {
            "L": self.L,
            "L_prime": self.L_prime,
            "x_prime": list(self.x_prime),
            "x": list(self.x),
            "xux": self.xux,
            "xux_f": self.xux_f,
            "phi": {c: self.phi[c] for c in PHI_CRITERIA},
        }
        if self.xux_g is not None:
            doc["xux_g"] = self.xux_g
        return doc


def overview_quality(scores: AggregatedScores, weights: XuxWeights, summary_id: str) -> float:
    return (
        weights.w_os * scores.get(OS, summary_id)
        + weights.w_of * scores.get(OF, summary_id)
        + weights.w_or * scores.get(OR, summary_id)
    )


def heading_representativeness(
    summary: StructuredSummary, section_index: int, scores: AggregatedScores
) -> float:
    """Mean statement-to-heading relevance, falling back to a direct label."""
    if not 1 <= section_index <= len(summary.sections):
        raise DataError(f"summary {summary.id} has no section {section_index}")
    j_count = len(summary.sections[section_index - 1].statements)
    statement_targets = [
        CriterionTarget(HR_STATEMENT, summary.id, i=section_index, j=j)
        for j in range(1, j_count + 1)
    ]
    if any(scores.has(t) for t in statement_targets):
        missing = scores.missing(statement_targets)
        if missing:
            raise UncoveredTargetError(missing)
        return sum(scores.value(t) for t in statement_targets) / j_count
    direct = CriterionTarget(HR_DIRECT, summary.id, i=section_index)
    return scores.value(direct)


def _line_gains(
    summary: StructuredSummary, lines: Sequence[Line], scores: AggregatedScores
) -> list[dict[str, float]]:
    """Per-line unweighted gain of each criterion at that line."""
    gains = []
    for line in lines:
        g = dict.fromkeys(PHI_CRITERIA, 0.0)
        if line.kind == OVERVIEW:
            g["os"] = scores.get(OS, summary.id)
            g["of"] = scores.get(OF, summary.id)
            g["or"] = scores.get(OR, summary.id)
        elif line.kind == HEADING:
            g["hr"] = heading_representativeness(summary, line.section, scores)
        elif line.kind == STATEMENT:
            g["srel"] = scores.get(SREL, summary.id, i=line.section, j=line.statement)
            g["sf"] = scores.get(SF, summary.id, i=line.section, j=line.statement)
        gains.append(g)
    return gains


def _cumulative(gains: list[dict[str, float]]) -> list[dict[str, float]]:
    running = dict.fromkeys(PHI_CRITERIA, 0.0)
    out = []
    for g in gains:
        for c in PHI_CRITERIA:
            running[c] += g[c]
        out.append(dict(running))
    return out


def _weighted_prefix(cumulative: list[dict[str, float]], weights: XuxWeights) -> list[float]:
    w = dict(zip(PHI_CRITERIA, weights.as_tuple()))
    return [sum(w[c] * cum[c] for c in PHI_CRITERIA) for cum in cumulative]


def line_prefix_score(
    summary: StructuredSummary,
    lines: Sequence[Line],
    scores: AggregatedScores,
    weights: XuxWeights,
) -> list[float]:
    """Cumulative weighted quality X'(l) of everything at or above line l."""
    return _weighted_prefix(_cumulative(_line_gains(summary, lines, scores)), weights)


def user_experience(prefix: Sequence[float]) -> list[float]:
    if not prefix:
        raise DataError("prefix scores must be non-empty")
    return [xp / l for l, xp in enumerate(prefix, start=1)]


def compute_report(
    summary: StructuredSummary,
    scores: AggregatedScores,
    weights: XuxWeights = XuxWeights(),
    lmax: LmaxConfig = LmaxConfig.unbounded(),
    apd: Optional[Apd] = None,
) -> XuxReport:
    all_lines = enumerate_lines(summary)
    total = len(all_lines)
    truncated = truncate_lines(all_lines, lmax.resolve())
    l_prime = len(truncated)

    cumulative = _cumulative(_line_gains(summary, all_lines, scores))
    x_prime_all = _weighted_prefix(cumulative, weights)
    x_all = user_experience(x_prime_all)
    x_prime = x_prime_all[:l_prime]
    x = x_all[:l_prime]

    xux_value = sum(x) / l_prime

    final_x = [x_all[line.index - 1] for line in all_lines if line.is_section_final]
    xux_f_value = sum(final_x) / len(final_x)

    phi = {
        c: sum(cumulative[l - 1][c] / l for l in range(1, l_prime + 1)) / l_prime
        for c in PHI_CRITERIA
    }

    xux_g_value: Optional[float] = None
    if apd is not None:
        if len(apd.probabilities) != l_prime:
            raise DataError(
                f"APD covers {len(apd.probabilities)} lines but L' = {l_prime}"
            )
        xux_g_value = sum(p * xl for p, xl in zip(apd.probabilities, x))

    return XuxReport(
        L=total,
        L_prime=l_prime,
        x_prime=tuple(x_prime),
        x=tuple(x),
        xux=xux_value,
        xux_f=xux_f_value,
        phi=phi,
        xux_g=xux_g_value,
    )


def xux(
    summary: StructuredSummary,
    scores: AggregatedScores,
    weights: XuxWeights = XuxWeights(),
    lmax: LmaxConfig = LmaxConfig.unbounded(),
) -> float:
    return compute_report(summary, scores, weights, lmax).xux


def xux_f(
    summary: StructuredSummary,
    scores: AggregatedScores,
    weights: XuxWeights = XuxWeights(),
) -> float:
    return compute_report(summary, scores, weights).xux_f


def xux_general(
    summary: StructuredSummary,
    scores: AggregatedScores,
    weights: XuxWeights,
    apd: Apd,
    lmax: LmaxConfig = LmaxConfig.unbounded(),
) -> float:
    report = compute_report(summary, scores, weights, lmax, apd=apd)
    assert report.xux_g is not None
    return report.xux_g


def scoring_gaps(summary: StructuredSummary, scores: AggregatedScores) -> list[CriterionTarget]:
    """Targets still needed before this summary can be scored."""
    gaps: list[CriterionTarget] = []
    for criterion in (OS, OF, OR):
        target = CriterionTarget(criterion, summary.id)
        if not scores.has(target):
            gaps.append(target)
    for i, sec in enumerate(summary.sections, start=1):
        if sec.heading:
            statement_targets = [
                CriterionTarget(HR_STATEMENT, summary.id, i=i, j=j)
                for j in range(1, len(sec.statements) + 1)
            ]
            if any(scores.has(t) for t in statement_targets):
                gaps.extend(t for t in statement_targets if not scores.has(t))
            elif not scores.has(CriterionTarget(HR_DIRECT, summary.id, i=i)):
                gaps.append(CriterionTarget(HR_DIRECT, summary.id, i=i))
        for j in range(1, len(sec.statements) + 1):
            for criterion in (SREL, SF):
                target = CriterionTarget(criterion, summary.id, i=i, j=j)
                if not scores.has(target):
                    gaps.append(target)
    return gaps


def decompose_phi(
    summary: StructuredSummary,
    scores: AggregatedScores,
    lmax: LmaxConfig = LmaxConfig.unbounded(),
) -> dict[str, float]:
    """Per-criterion contributions such that xux = sum_c w_c * phi_c."""
    return compute_report(summary, scores, XuxWeights(), lmax).phi
