"""External labelling client: one simple question per request, strict parsing.

Each criterion gets its own prompt so the labelling endpoint answers one
controllable subtask at a time. Answers outside the declared vocabulary are
retried and then reported as failures with the full transcript.
"""
from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional, Sequence

import httpx

from .errors import DataError, LabellingError
from .labels import (
    COMP_ABS,
    HR_DIRECT,
    HR_STATEMENT,
    LEFT,
    LLM,
    OF,
    OR,
    OS,
    POOL_REL,
    RIGHT,
    SF,
    SREL,
    CriterionTarget,
    Grade3,
    LabelRecord,
    PreferenceRecord,
)
from .comp import PooledSection
from .model import Query, StructuredSummary

_WORD_RE = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class LabellerConfig:
    endpoint: str = "http://localhost:8080/v1/label"
    model: str = "labeller"
    auth_env: str = "SGSS_API_TOKEN"
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base: float = 0.5
    temperature: float = 0.0
    concurrency: int = 4
    seed: int = 0
    # "score_no": statements without citations get faithfulness No without an
    # endpoint call; "full_doclist": judge against the whole doclist instead.
    zero_citation_policy: str = "score_no"

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise DataError("max_retries must be >= 0")
        if self.concurrency < 1:
            raise DataError("concurrency must be >= 1")


@dataclass(frozen=True)
class PromptTemplate:
    criterion: str
    template: str
    answers: str  # "grade" or "preference"

    def render(self, context: dict[str, str]) -> str:
        class _Defaulting(dict):
            def __missing__(self, key: str) -> str:
                return ""

        return self.template.format_map(_Defaulting(context))


def load_templates(path: Optional[str] = None) -> dict[str, PromptTemplate]:
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = json.loads(
            resources.files("sgss").joinpath("prompts/templates.json").read_text("utf-8")
        )
    return {
        criterion: PromptTemplate(criterion, spec["template"], spec["answers"])
        for criterion, spec in raw.items()
    }


def parse_grade(text: str) -> Grade3:
    words = _WORD_RE.findall(text.lower())
    if words[:2] == ["not", "relevant"] or words[:1] == ["no"] or words[:1] == ["not"]:
        return Grade3.NO
    if words[:1] == ["perfectly"]:
        return Grade3.PERFECTLY
    if words[:1] == ["partially"]:
        return Grade3.PARTIALLY
    raise DataError(f"answer {text!r} is outside the grade vocabulary")


def parse_choice(text: str) -> str:
    words = _WORD_RE.findall(text.lower())
    if words[:1] == ["left"]:
        return LEFT
    if words[:1] == ["right"]:
        return RIGHT
    raise DataError(f"answer {text!r} is outside the preference vocabulary")


def render_summary_text(summary: StructuredSummary) -> str:
    parts = []
    if summary.overview.position != "trailing":
        parts.append(f"Overview: {summary.overview.text}")
    for sec in summary.sections:
        if sec.heading:
            parts.append(f"# {sec.heading}")
        parts.extend(f"- {stmt.text}" for stmt in sec.statements)
    if summary.overview.position == "trailing":
        parts.append(f"Summary: {summary.overview.text}")
    return "\n".join(parts)


def _cited_docs_text(summary: StructuredSummary, citations: frozenset[int]) -> str:
    docs = [d for d in summary.doclist if d.citation_number in citations]
    return "\n".join(
        f"[{d.citation_number}] {d.title}: {d.snippet or d.url}" for d in docs
    )


def render_context(
    target: CriterionTarget,
    summary: StructuredSummary,
    query: Query,
    pooled_section: Optional[PooledSection] = None,
) -> dict[str, str]:
    """Materials a criterion's question may reference, keyed by placeholder."""
    ctx = {
        "query": query.text,
        "overview": summary.overview.text,
        "summary": render_summary_text(summary),
    }
    if target.i is not None:
        sec = summary.sections[target.i - 1]
        ctx["heading"] = sec.heading
        if target.criterion == HR_DIRECT:
            ctx["summary"] = "\n".join(f"- {st.text}" for st in sec.statements)
        if target.j is not None:
            stmt = sec.statements[target.j - 1]
            ctx["statement"] = stmt.text
            ctx["cited_docs"] = _cited_docs_text(summary, stmt.citations)
    if target.criterion == OF:
        ctx["cited_docs"] = _cited_docs_text(summary, summary.overview.citations)
    if pooled_section is not None:
        ctx["pooled_section"] = "\n".join(
            ([f"# {pooled_section.heading}"] if pooled_section.heading else [])
            + [f"- {text}" for text in pooled_section.statements]
        )
    return ctx


class LlmLabeller:
    """HTTP client posting {model, messages, temperature} and reading {content}."""

    def __init__(
        self,
        cfg: LabellerConfig,
        templates: Optional[dict[str, PromptTemplate]] = None,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.cfg = cfg
        self.templates = templates or load_templates()
        self._client = httpx.Client(transport=transport, timeout=cfg.timeout)
        self._sleep = sleep
        self._ts_lock = threading.Lock()
        self._ts_counter = 0
        self.transcripts: list[dict] = []
        self.presentation_counts = {"unswapped": 0, "swapped": 0}

    def close(self) -> None:
        self._client.close()

    def _next_ts(self) -> float:
        with self._ts_lock:
            self._ts_counter += 1
            return float(self._ts_counter)

    def _post(self, prompt: str) -> str:
        headers = {}
        token = os.environ.get(self.cfg.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        response = self._client.post(
            self.cfg.endpoint,
            json={
                "model": self.cfg.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.cfg.temperature,
            },
            headers=headers,
        )
        if response.status_code == 429 or response.status_code >= 500:
            raise httpx.TransportError(f"transient status {response.status_code}")
        response.raise_for_status()
        return response.json()["content"]

    def _ask(self, prompt: str, parse: Callable[[str], object]) -> object:
        transcript: list[dict] = []
        attempts = self.cfg.max_retries + 1
        for attempt in range(attempts):
            if attempt:
                self._sleep(self.cfg.backoff_base * (2 ** (attempt - 1)))
            try:
                content = self._post(prompt)
            except (httpx.HTTPError, KeyError) as exc:
                transcript.append({"prompt": prompt, "error": str(exc)})
                continue
            transcript.append({"prompt": prompt, "response": content})
            try:
                parsed = parse(content)
            except DataError as exc:
                transcript.append({"parse_error": str(exc)})
                continue
            self.transcripts.extend(transcript)
            return parsed
        self.transcripts.extend(transcript)
        raise LabellingError(f"labelling failed after {attempts} attempts", transcript)

    def label_criterion(
        self,
        target: CriterionTarget,
        summary: StructuredSummary,
        query: Query,
        pooled_section: Optional[PooledSection] = None,
    ) -> LabelRecord:
        context = render_context(target, summary, query, pooled_section)
        if (
            self.cfg.zero_citation_policy == "score_no"
            and target.criterion in (OF, SF)
            and not context.get("cited_docs")
        ):
            # A claim with no cited documents cannot be entailed by them.
            return LabelRecord(
                labeller_id=self.cfg.model,
                labeller_kind=LLM,
                target=target,
                grade=Grade3.NO,
                ts=self._next_ts(),
            )
        template = self.templates[target.criterion]
        grade = self._ask(template.render(context), parse_grade)
        return LabelRecord(
            labeller_id=self.cfg.model,
            labeller_kind=LLM,
            target=target,
            grade=grade,  # type: ignore[arg-type]
            ts=self._next_ts(),
        )

    def label_pair_preference(
        self,
        pair_id: str,
        left: StructuredSummary,
        right: StructuredSummary,
        query: Query,
    ) -> PreferenceRecord:
        """Present the pair in a randomized order and map the answer back."""
        rng = random.Random(f"{self.cfg.seed}:{pair_id}")
        swapped = rng.random() < 0.5
        self.presentation_counts["swapped" if swapped else "unswapped"] += 1
        shown_left, shown_right = (right, left) if swapped else (left, right)
        prompt = self.templates["Pref"].render(
            {
                "query": query.text,
                "left": render_summary_text(shown_left),
                "right": render_summary_text(shown_right),
            }
        )
        raw_choice = self._ask(prompt, parse_choice)
        choice = raw_choice
        if swapped:
            choice = RIGHT if raw_choice == LEFT else LEFT
        return PreferenceRecord(
            labeller_id=self.cfg.model,
            pair_id=pair_id,
            choice=choice,  # type: ignore[arg-type]
            labeller_kind=LLM,
            ts=self._next_ts(),
        )

    def batch_label(
        self,
        jobs: Sequence[tuple[CriterionTarget, StructuredSummary, Query, Optional[PooledSection]]],
    ) -> tuple[list[LabelRecord], list[dict]]:
        """Label many targets with bounded concurrency.

        Output order follows input order; per-target failures are collected
        rather than aborting the batch.
        """
        results: list[Optional[LabelRecord]] = [None] * len(jobs)
        failures: list[dict] = []
        failure_lock = threading.Lock()

        def work(index: int) -> None:
            target, summary, query, pooled = jobs[index]
            try:
                results[index] = self.label_criterion(target, summary, query, pooled)
            except LabellingError as exc:
                with failure_lock:
                    failures.append(
                        {"target": str(target), "error": str(exc), "transcript": exc.transcript}
                    )

        with ThreadPoolExecutor(max_workers=self.cfg.concurrency) as pool:
            list(pool.map(work, range(len(jobs))))
        labels = [r for r in results if r is not None]
        labels = [
            LabelRecord(r.labeller_id, r.labeller_kind, r.target, r.grade, ts=float(i + 1))
            for i, r in enumerate(labels)
        ]
        failures.sort(key=lambda f: f["target"])
        return labels, failures


def absolute_targets(summary: StructuredSummary) -> list[CriterionTarget]:
    """Every absolute criterion the labeller answers for one summary."""
    sid = summary.id
    targets = [CriterionTarget(OS, sid), CriterionTarget(OF, sid), CriterionTarget(OR, sid)]
    for i, sec in enumerate(summary.sections, start=1):
        for j in range(1, len(sec.statements) + 1):
            targets.append(CriterionTarget(HR_STATEMENT, sid, i=i, j=j))
            targets.append(CriterionTarget(SREL, sid, i=i, j=j))
            targets.append(CriterionTarget(SF, sid, i=i, j=j))
    targets.append(CriterionTarget(COMP_ABS, sid))
    return targets
