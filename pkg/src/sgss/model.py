"""Domain model for structured search summaries.

A structured summary is an overview plus zero or more headed sections of
statements, backed by a doclist of cited documents. Reading positions are
expressed as 1-based line numbers where the overview, each heading, and each
statement occupy one line.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .errors import DataError

SCHEMA_VERSION = "1"

LEADING = "leading"
TRAILING = "trailing"

NO_HEADINGS = "NoHeadings"
NO_SECTION1 = "NoSection1"

OVERVIEW = "overview"
HEADING = "heading"
STATEMENT = "statement"


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    language: str = "en"


@dataclass(frozen=True)
class DocEntry:
    citation_number: int
    url: str
    title: str
    snippet: Optional[str] = None


@dataclass(frozen=True)
class Statement:
    text: str
    citations: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Section:
    heading: str
    statements: tuple[Statement, ...]


@dataclass(frozen=True)
class Overview:
    text: str
    citations: frozenset[int] = frozenset()
    position: str = LEADING


@dataclass(frozen=True)
class Provenance:
    parent_id: str
    strategy: str


@dataclass(frozen=True)
class StructuredSummary:
    id: str
    query_id: str
    system_id: str
    overview: Overview
    sections: tuple[Section, ...] = ()
    doclist: tuple[DocEntry, ...] = ()
    provenance: Optional[Provenance] = None


@dataclass(frozen=True)
class Line:
    """One reading position: the overview, a heading, or a statement."""

    index: int
    kind: str
    section: Optional[int] = None  # 1-based section number i
    statement: Optional[int] = None  # 1-based statement number j
    is_section_final: bool = False


def line_count(summary: StructuredSummary) -> int:
    """Total number of lines: overview + headings + statements.

    Sections whose heading was stripped (empty string) contribute no heading
    line, which is how heading-removal degradation shortens the summary.
    """
    headings = sum(1 for sec in summary.sections if sec.heading)
    statements = sum(len(sec.statements) for sec in summary.sections)
    return 1 + headings + statements


def enumerate_lines(summary: StructuredSummary) -> list[Line]:
    """Enumerate lines in reading order with section-final flags set.

    The section-final flag marks the overview line and the last statement line
    of each section. A trailing overview is enumerated after the sections.
    """
    body: list[tuple[str, Optional[int], Optional[int], bool]] = []
    for i, sec in enumerate(summary.sections, start=1):
        if sec.heading:
            body.append((HEADING, i, None, False))
        last = len(sec.statements)
        for j in range(1, last + 1):
            body.append((STATEMENT, i, j, j == last))
    overview = (OVERVIEW, None, None, True)
    raw = body + [overview] if summary.overview.position == TRAILING else [overview] + body
    return [
        Line(index=idx, kind=kind, section=i, statement=j, is_section_final=final)
        for idx, (kind, i, j, final) in enumerate(raw, start=1)
    ]


def truncate_lines(lines: list[Line], l_max: Optional[int]) -> list[Line]:
    """First min(L, l_max) lines; l_max None means unbounded."""
    if l_max is None:
        return list(lines)
    if l_max < 1:
        raise DataError(f"l_max must be >= 1, got {l_max}")
    return list(lines)[: min(len(lines), l_max)]


def degrade_no_headings(summary: StructuredSummary) -> StructuredSummary:
    """Strip every section heading, keeping statement coordinates stable."""
    if not summary.sections:
        raise DataError(f"summary {summary.id} has no sections to strip headings from")
    sections = tuple(Section(heading="", statements=sec.statements) for sec in summary.sections)
    return replace(
        summary,
        id=f"{summary.id}#noheadings",
        sections=sections,
        provenance=Provenance(parent_id=summary.id, strategy=NO_HEADINGS),
    )


def degrade_no_section1(summary: StructuredSummary) -> StructuredSummary:
    """Drop the first section; remaining sections are renumbered."""
    if not summary.sections:
        raise DataError(f"summary {summary.id} has no sections to remove")
    return replace(
        summary,
        id=f"{summary.id}#nosection1",
        sections=summary.sections[1:],
        provenance=Provenance(parent_id=summary.id, strategy=NO_SECTION1),
    )


def validate(summary: StructuredSummary) -> list[str]:
    """Return data violations (empty list means the summary is well formed)."""
    violations: list[str] = []
    seen: set[int] = set()
    for idx, doc in enumerate(summary.doclist):
        if doc.citation_number < 1:
            violations.append(f"doclist[{idx}]: citation_number must be >= 1")
        if doc.citation_number in seen:
            violations.append(f"doclist[{idx}]: duplicate citation_number {doc.citation_number}")
        seen.add(doc.citation_number)

    def check_citations(path: str, citations: Iterable[int]) -> None:
        for n in sorted(citations):
            if n not in seen:
                violations.append(f"{path}: unresolved citation {n}")

    check_citations("overview", summary.overview.citations)
    if summary.overview.position not in (LEADING, TRAILING):
        violations.append(f"overview.position: unknown position {summary.overview.position!r}")
    for i, sec in enumerate(summary.sections, start=1):
        if not sec.statements:
            violations.append(f"sections[{i}]: J_i must be > 0")
        for j, stmt in enumerate(sec.statements, start=1):
            check_citations(f"sections[{i}].statements[{j}]", stmt.citations)
    return violations


# --- JSON interchange -------------------------------------------------------

def summary_to_doc(summary: StructuredSummary, query: Query) -> dict:
    doc = {
        "version": SCHEMA_VERSION,
        "query": {"id": query.id, "text": query.text, "language": query.language},
        "summary": {
            "id": summary.id,
            "system_id": summary.system_id,
            "overview": {
                "text": summary.overview.text,
                "citations": sorted(summary.overview.citations),
                "position": summary.overview.position,
            },
            "sections": [
                {
                    "heading": sec.heading,
                    "statements": [
                        {"text": stmt.text, "citations": sorted(stmt.citations)}
                        for stmt in sec.statements
                    ],
                }
                for sec in summary.sections
            ],
            "doclist": [
                {
                    "n": d.citation_number,
                    "url": d.url,
                    "title": d.title,
                    **({"snippet": d.snippet} if d.snippet is not None else {}),
                }
                for d in summary.doclist
            ],
        },
    }
    if summary.provenance is not None:
        doc["summary"]["provenance"] = {
            "parent_id": summary.provenance.parent_id,
            "strategy": summary.provenance.strategy,
        }
    return doc


def summary_from_doc(doc: dict) -> tuple[Query, StructuredSummary]:
    try:
        q = doc["query"]
        s = doc["summary"]
        query = Query(id=q["id"], text=q["text"], language=q.get("language", "en"))
        if not query.text:
            raise DataError("query.text must be non-empty")
        prov = s.get("provenance")
        summary = StructuredSummary(
            id=s["id"],
            query_id=query.id,
            system_id=s["system_id"],
            overview=Overview(
                text=s["overview"]["text"],
                citations=frozenset(s["overview"].get("citations", [])),
                position=s["overview"].get("position", LEADING),
            ),
            sections=tuple(
                Section(
                    heading=sec["heading"],
                    statements=tuple(
                        Statement(text=st["text"], citations=frozenset(st.get("citations", [])))
                        for st in sec["statements"]
                    ),
                )
                for sec in s.get("sections", [])
            ),
            doclist=tuple(
                DocEntry(
                    citation_number=d["n"],
                    url=d["url"],
                    title=d["title"],
                    snippet=d.get("snippet"),
                )
                for d in s.get("doclist", [])
            ),
            provenance=Provenance(prov["parent_id"], prov["strategy"]) if prov else None,
        )
    except KeyError as exc:
        raise DataError(f"summary document is missing field {exc}") from exc
    return query, summary


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
