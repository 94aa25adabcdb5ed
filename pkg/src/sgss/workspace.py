"""Dataset persistence: newline-delimited JSON datasets with atomic writes."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError
from .labels import (
    LabelRecord,
    PreferenceRecord,
    record_from_json,
    record_to_json,
)
from .measure import PreferencePair
from .model import Query, StructuredSummary, canonical_json, summary_from_doc, summary_to_doc


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | Path, doc: object) -> None:
    atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_json(path: str | Path) -> object:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def iter_jsonl(path: str | Path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc


def write_jsonl(path: str | Path, docs: Iterable[dict]) -> None:
    atomic_write_text(
        path, "".join(canonical_json(doc) + "\n" for doc in docs)
    )


def read_summaries(path: str | Path) -> list[tuple[Query, StructuredSummary]]:
    return [summary_from_doc(doc) for doc in iter_jsonl(path)]


def write_summaries(path: str | Path, items: Sequence[tuple[Query, StructuredSummary]]) -> None:
    write_jsonl(path, [summary_to_doc(summary, query) for query, summary in items])


def read_labels(path: str | Path) -> tuple[list[LabelRecord], list[PreferenceRecord]]:
    labels: list[LabelRecord] = []
    preferences: list[PreferenceRecord] = []
    for doc in iter_jsonl(path):
        record = record_from_json(doc)
        if isinstance(record, LabelRecord):
            labels.append(record)
        else:
            preferences.append(record)
    return labels, preferences


def write_labels(path: str | Path, records: Sequence[LabelRecord | PreferenceRecord]) -> None:
    write_jsonl(path, [record_to_json(rec) for rec in records])


def pair_to_json(pair: PreferencePair) -> dict:
    return {
        "pair_id": pair.pair_id,
        "query_id": pair.query_id,
        "left": pair.left_id,
        "right": pair.right_id,
        "origin": pair.origin,
        "preferences": [
            {"labeller_id": p.labeller_id, "kind": p.labeller_kind, "choice": p.choice, "ts": p.ts}
            for p in pair.preferences
        ],
    }


def pair_from_json(doc: dict) -> PreferencePair:
    try:
        return PreferencePair(
            pair_id=doc["pair_id"],
            query_id=doc["query_id"],
            left_id=doc["left"],
            right_id=doc["right"],
            origin=doc.get("origin", "annotated"),
            preferences=tuple(
                PreferenceRecord(
                    labeller_id=p["labeller_id"],
                    pair_id=doc["pair_id"],
                    choice=p["choice"],
                    labeller_kind=p.get("kind", "human"),
                    ts=p.get("ts", 0.0),
                )
                for p in doc.get("preferences", [])
            ),
        )
    except KeyError as exc:
        raise DataError(f"pair record is missing field {exc}") from exc


def read_pairs(path: str | Path) -> list[PreferencePair]:
    return [pair_from_json(doc) for doc in iter_jsonl(path)]


def write_pairs(path: str | Path, pairs: Sequence[PreferencePair]) -> None:
    write_jsonl(path, [pair_to_json(p) for p in pairs])


class Workspace:
    """A directory of datasets addressed by conventional file names."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def path(self, name: str) -> Path:
        return self.root / name

    @property
    def summaries_path(self) -> Path:
        return self.path("summaries.jsonl")

    @property
    def pairs_path(self) -> Path:
        return self.path("pairs.jsonl")

    @property
    def labels_path(self) -> Path:
        return self.path("labels.jsonl")
