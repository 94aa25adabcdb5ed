"""HTTP service: label collection for the annotation UI plus scoring endpoints."""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import comp as comp_mod
from .errors import DataError, UncoveredTargetError
from .labels import (
    HUMAN,
    LEFT,
    RIGHT,
    CriterionTarget,
    Grade3,
    LabelRecord,
    LabelStore,
    PreferenceRecord,
    aggregate,
    checklist_targets,
    record_from_json,
)
from .measure import PreferencePair, SgssWeights
from .model import StructuredSummary, summary_from_doc, summary_to_doc
from .workspace import Workspace, read_pairs, read_summaries
from .xux import LmaxConfig, XuxWeights, compute_report


class LabelIn(BaseModel):
    criterion: str
    summary_id: str
    i: Optional[int] = None
    j: Optional[int] = None
    pooled_section_id: Optional[str] = None
    grade: str


class SubmissionIn(BaseModel):
    labeller_id: str = Field(min_length=1)
    kind: str = HUMAN
    labels: list[LabelIn] = Field(default_factory=list)
    # Preference names the presented side, not the canonical one.
    preference: Optional[Literal["A", "B"]] = None
    partial: bool = False


class LmaxIn(BaseModel):
    mode: str = "unbounded"
    l_max: Optional[int] = None
    minutes: Optional[float] = None
    avlen: Optional[float] = None
    chars_per_minute: float = 500.0

    def to_config(self) -> LmaxConfig:
        return LmaxConfig(
            mode=self.mode,
            l_max=self.l_max,
            minutes=self.minutes,
            avlen=self.avlen,
            chars_per_minute=self.chars_per_minute,
        )


class ScoreIn(BaseModel):
    doc: dict
    labels: list[dict]
    policy: str = "combined"
    weights: Optional[dict] = None
    lmax: LmaxIn = LmaxIn()


class CompIn(BaseModel):
    docs: list[dict]
    labels: list[dict]
    policy: str = "combined"


def _assigned_swap(labeller: str, pair_id: str) -> bool:
    digest = hashlib.sha256(f"{labeller}:{pair_id}".encode("utf-8")).digest()
    return digest[0] % 2 == 1


class AnnotationState:
    def __init__(self, workspace: Workspace) -> None:
        self.workspace = workspace
        self.summaries: dict[str, StructuredSummary] = {}
        self.queries: dict[str, dict] = {}
        self._docs: dict[str, dict] = {}
        for query, summary in read_summaries(workspace.summaries_path):
            self.summaries[summary.id] = summary
            self.queries[summary.id] = {
                "id": query.id,
                "text": query.text,
                "language": query.language,
            }
            self._docs[summary.id] = summary_to_doc(summary, query)
        self.pairs: dict[str, PreferencePair] = {
            p.pair_id: p for p in read_pairs(workspace.pairs_path)
        }
        self.store = LabelStore(str(workspace.labels_path))
        self.skipped: dict[str, set[str]] = {}  # labeller -> pair ids sent to back

    def pair_checklist(self, pair: PreferencePair) -> list[CriterionTarget]:
        targets = []
        for sid in (pair.left_id, pair.right_id):
            targets.extend(checklist_targets(self.summaries[sid]))
        return targets

    def status_for(self, pair: PreferencePair, labeller: str) -> str:
        stored = {
            rec.target
            for rec in self.store.labels()
            if rec.labeller_id == labeller
        }
        has_pref = any(
            rec.pair_id == pair.pair_id and rec.labeller_id == labeller
            for rec in self.store.preferences()
        )
        required = set(self.pair_checklist(pair))
        done = required & stored
        if has_pref and done == required:
            return "complete"
        if has_pref or done:
            return "partial"
        return "open"


def create_app(workspace: Workspace, ui_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="sgss annotation service")
    state = AnnotationState(workspace)
    app.state.annotation = state

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def pair_payload(pair: PreferencePair, labeller: str) -> dict:
        swap = _assigned_swap(labeller, pair.pair_id)
        first, second = (
            (pair.right_id, pair.left_id) if swap else (pair.left_id, pair.right_id)
        )
        return {
            "pair_id": pair.pair_id,
            "query": state.queries[pair.left_id],
            "sides": {"A": state._docs[first], "B": state._docs[second]},
            "status": state.status_for(pair, labeller),
        }

    @app.get("/api/pairs/next")
    def next_pair(labeller: str) -> dict:
        skipped = state.skipped.get(labeller, set())
        open_ids = [
            pid
            for pid in sorted(state.pairs)
            if state.status_for(state.pairs[pid], labeller) != "complete"
        ]
        ordered = [pid for pid in open_ids if pid not in skipped] + [
            pid for pid in open_ids if pid in skipped
        ]
        if not ordered:
            return {"pair_id": None, "done": True}
        return pair_payload(state.pairs[ordered[0]], labeller)

    @app.get("/api/pairs/{pair_id}")
    def get_pair(pair_id: str, labeller: str) -> dict:
        pair = state.pairs.get(pair_id)
        if pair is None:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id}")
        return pair_payload(pair, labeller)

    @app.post("/api/pairs/{pair_id}/skip")
    def skip_pair(pair_id: str, labeller: str) -> dict:
        if pair_id not in state.pairs:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id}")
        state.skipped.setdefault(labeller, set()).add(pair_id)
        return {"pair_id": pair_id, "skipped": True}

    @app.post("/api/pairs/{pair_id}/labels")
    def submit_labels(pair_id: str, submission: SubmissionIn) -> dict:
        pair = state.pairs.get(pair_id)
        if pair is None:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id}")
        required = set(state.pair_checklist(pair))

        records: list[LabelRecord] = []
        for label in submission.labels:
            try:
                target = CriterionTarget(
                    criterion=label.criterion,
                    summary_id=label.summary_id,
                    i=label.i,
                    j=label.j,
                    pooled_section_id=label.pooled_section_id,
                )
                grade = Grade3.parse(label.grade)
            except DataError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            if target not in required:
                raise HTTPException(
                    status_code=409, detail=f"target {target} is not on the pair's checklist"
                )
            records.append(
                LabelRecord(
                    labeller_id=submission.labeller_id,
                    labeller_kind=submission.kind,
                    target=target,
                    grade=grade,
                )
            )

        preference: Optional[PreferenceRecord] = None
        if submission.preference is not None:
            swap = _assigned_swap(submission.labeller_id, pair_id)
            chose_first = submission.preference == "A"
            canonical = (RIGHT if chose_first else LEFT) if swap else (LEFT if chose_first else RIGHT)
            preference = PreferenceRecord(
                labeller_id=submission.labeller_id,
                pair_id=pair_id,
                choice=canonical,
                labeller_kind=submission.kind,
            )

        if not submission.partial:
            stored = {
                rec.target
                for rec in state.store.labels()
                if rec.labeller_id == submission.labeller_id
            }
            covered = stored | {rec.target for rec in records}
            missing = sorted(str(t) for t in required - covered)
            has_pref = preference is not None or any(
                rec.pair_id == pair_id and rec.labeller_id == submission.labeller_id
                for rec in state.store.preferences()
            )
            if not has_pref:
                missing.append("preference")
            if missing:
                raise HTTPException(
                    status_code=409,
                    detail={"missing_targets": missing},
                )

        batch: list[LabelRecord | PreferenceRecord] = list(records)
        if preference is not None:
            batch.append(preference)
        state.store.append(batch)
        return {
            "pair_id": pair_id,
            "stored": len(batch),
            "status": state.status_for(pair, submission.labeller_id),
        }

    @app.get("/api/progress")
    def progress() -> dict:
        labellers = sorted(
            {rec.labeller_id for rec in state.store.snapshot()}
        )
        return {
            "pairs": [
                {
                    "pair_id": pid,
                    "status": {
                        labeller: state.status_for(state.pairs[pid], labeller)
                        for labeller in labellers
                    },
                }
                for pid in sorted(state.pairs)
            ],
            "total_pairs": len(state.pairs),
        }

    @app.post("/api/score")
    def score(body: ScoreIn) -> dict:
        try:
            query, summary = summary_from_doc(body.doc)
            records = [record_from_json(doc) for doc in body.labels]
            scores = aggregate(
                [r for r in records if isinstance(r, LabelRecord)], policy=body.policy
            )
            weights = (
                SgssWeights.from_dict(body.weights).xux if body.weights else XuxWeights()
            )
            report = compute_report(summary, scores, weights, body.lmax.to_config())
        except UncoveredTargetError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"summary_id": summary.id, "query_id": query.id, **report.to_dict()}

    @app.post("/api/comp")
    def comp_scores(body: CompIn) -> dict:
        try:
            summaries = [summary_from_doc(doc)[1] for doc in body.docs]
            records = [record_from_json(doc) for doc in body.labels]
            scores = aggregate(
                [r for r in records if isinstance(r, LabelRecord)], policy=body.policy
            )
            report = comp_mod.comp_report(summaries, scores)
        except UncoveredTargetError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return report.to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
