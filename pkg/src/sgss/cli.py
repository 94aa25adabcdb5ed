"""Command-line entry points.

Exit codes: 0 success, 2 data or coverage error, 3 fit non-convergence.
All commands are deterministic given their input files and seed flags.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import comp as comp_mod
from .errors import DataError, SgssError
from .labels import (
    LabelRecord,
    PreferenceRecord,
    aggregate,
    derive_degraded_records,
)
from .llm import LabellerConfig, LlmLabeller, absolute_targets
from .measure import (
    DERIVED_DEGRADATION,
    FEATURE_NAMES,
    FitConfig,
    PreferencePair,
    SgssWeights,
    evaluate_pairs,
    fit_sgss_weights,
)
from .labels import COMP_ABS, POOL_REL, CriterionTarget, LEFT
from .mock import make_mock_transport
from .model import degrade_no_headings, degrade_no_section1
from .workspace import (
    Workspace,
    read_json,
    read_labels,
    read_pairs,
    read_summaries,
    write_json,
    write_labels,
    write_pairs,
    write_summaries,
    atomic_write_text,
)
from .xux import LmaxConfig, compute_report, scoring_gaps

EXIT_OK = 0
EXIT_DATA = 2
EXIT_NO_CONVERGENCE = 3


def _resolve(workspace: Path, name: Optional[str]) -> Optional[Path]:
    if name is None:
        return None
    path = Path(name)
    return path if path.is_absolute() else workspace / path


def _lmax_from_args(args: argparse.Namespace) -> LmaxConfig:
    if args.lmax is not None:
        return LmaxConfig.fixed(args.lmax)
    if args.lmax_minutes is not None:
        if args.avlen is None:
            raise DataError("--lmax-minutes requires --avlen")
        return LmaxConfig.reading_model(args.lmax_minutes, args.avlen, args.rate)
    return LmaxConfig.unbounded()


def _add_lmax_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lmax", type=int, default=None, help="fixed line cap")
    parser.add_argument("--lmax-minutes", type=float, default=None, help="reading budget in minutes")
    parser.add_argument("--avlen", type=float, default=None, help="mean characters per line")
    parser.add_argument("--rate", type=float, default=500.0, help="reading speed, chars/minute")


def _load_scores(path: Path, policy: str):
    labels, preferences = read_labels(path)
    return aggregate(labels, policy=policy), labels, preferences


def _load_weights(path: Optional[Path]) -> SgssWeights:
    if path is None:
        return SgssWeights()
    return SgssWeights.from_dict(read_json(path))


def _load_comps(path: Optional[Path]) -> dict[str, float]:
    if path is None:
        return {}
    doc = read_json(path)
    if isinstance(doc, dict) and "comp" in doc:
        doc = [doc]
    if isinstance(doc, list):
        merged: dict[str, float] = {}
        for entry in doc:
            merged.update(entry["comp"])
        return merged
    return dict(doc)


def cmd_score(args: argparse.Namespace, workspace: Path) -> int:
    items = read_summaries(_resolve(workspace, args.summaries))
    scores, _, _ = _load_scores(_resolve(workspace, args.labels), args.policy)
    weights = _load_weights(_resolve(workspace, args.weights))
    lmax = _lmax_from_args(args)

    gaps = []
    for _, summary in items:
        gaps.extend(scoring_gaps(summary, scores))
    if gaps:
        for target in gaps:
            print(f"missing label: {target}", file=sys.stderr)
        return EXIT_DATA

    reports = [
        {
            "summary_id": summary.id,
            "query_id": query.id,
            **compute_report(summary, scores, weights.xux, lmax).to_dict(),
        }
        for query, summary in items
    ]
    write_json(_resolve(workspace, args.out), reports)
    return EXIT_OK


def cmd_comp(args: argparse.Namespace, workspace: Path) -> int:
    items = read_summaries(_resolve(workspace, args.summaries))
    scores, _, _ = _load_scores(_resolve(workspace, args.labels), args.policy)
    by_query: dict[str, list] = {}
    for _, summary in items:
        by_query.setdefault(summary.query_id, []).append(summary)
    reports = []
    for query_id in sorted(by_query):
        group = by_query[query_id]
        if len(group) <= 1:
            print(f"query {query_id}: pooling requires N > 1 summaries", file=sys.stderr)
            return EXIT_DATA
        reports.append(comp_mod.comp_report(group, scores).to_dict())
    write_json(_resolve(workspace, args.out), reports)
    return EXIT_OK


def cmd_pool(args: argparse.Namespace, workspace: Path) -> int:
    items = read_summaries(_resolve(workspace, args.summaries))
    by_query: dict[str, list] = {}
    for _, summary in items:
        by_query.setdefault(summary.query_id, []).append(summary)
    skeletons = []
    for query_id in sorted(by_query):
        matrix = comp_mod.build_pool(by_query[query_id])
        skeletons.append(
            {
                "query_id": query_id,
                "pooled_sections": [
                    {
                        "id": sec.id,
                        "source_summary": sec.source_summary_id,
                        "i": sec.source_index,
                        "heading": sec.heading,
                    }
                    for sec in matrix.pooled
                ],
                "targets_to_label": [
                    {"criterion": POOL_REL, "summary_id": sid, "pooled_section_id": pid}
                    for sid, pid in matrix.unlabelled_cells()
                ],
            }
        )
    write_json(_resolve(workspace, args.out), skeletons)
    return EXIT_OK


def cmd_degrade(args: argparse.Namespace, workspace: Path) -> int:
    items = read_summaries(_resolve(workspace, args.summaries))
    _, labels, _ = _load_scores(_resolve(workspace, args.labels), "combined")
    degrade = degrade_no_headings if args.strategy == "noheadings" else degrade_no_section1

    out_items = []
    out_labels: list[LabelRecord | PreferenceRecord] = []
    out_pairs: list[PreferencePair] = []
    for query, summary in items:
        degraded = degrade(summary)
        out_items.append((query, degraded))
        records, preference = derive_degraded_records(labels, summary, degraded)
        out_labels.extend(records)
        if preference is not None:
            out_labels.append(preference)
            out_pairs.append(
                PreferencePair(
                    pair_id=preference.pair_id,
                    query_id=summary.query_id,
                    left_id=summary.id,
                    right_id=degraded.id,
                    preferences=(preference,),
                    origin=DERIVED_DEGRADATION,
                )
            )
    write_summaries(_resolve(workspace, args.out_summaries), out_items)
    write_labels(_resolve(workspace, args.out_labels), out_labels)
    write_pairs(_resolve(workspace, args.out_pairs), out_pairs)
    return EXIT_OK


def cmd_label_llm(args: argparse.Namespace, workspace: Path) -> int:
    items = read_summaries(_resolve(workspace, args.summaries))
    cfg = LabellerConfig(
        endpoint=args.endpoint,
        model=args.model,
        max_retries=args.max_retries,
        backoff_base=0.0 if args.mock else 0.5,
        concurrency=args.concurrency,
        seed=args.seed,
    )
    transport = make_mock_transport() if args.mock else None
    labeller = LlmLabeller(cfg, transport=transport)

    jobs = []
    queries = {}
    summaries = {}
    for query, summary in items:
        queries[summary.id] = query
        summaries[summary.id] = summary
        for target in absolute_targets(summary):
            jobs.append((target, summary, query, None))
    if args.pool:
        by_query: dict[str, list] = {}
        for _, summary in items:
            by_query.setdefault(summary.query_id, []).append(summary)
        for query_id in sorted(by_query):
            group = by_query[query_id]
            if len(group) <= 1:
                continue
            matrix = comp_mod.build_pool(group)
            pooled = {sec.id: sec for sec in matrix.pooled}
            for sid, pid in matrix.unlabelled_cells():
                target = CriterionTarget(POOL_REL, sid, pooled_section_id=pid)
                jobs.append((target, summaries[sid], queries[sid], pooled[pid]))

    records, failures = labeller.batch_label(jobs)
    out: list[LabelRecord | PreferenceRecord] = list(records)

    if args.pairs:
        for pair in read_pairs(_resolve(workspace, args.pairs)):
            out.append(
                labeller.label_pair_preference(
                    pair.pair_id,
                    summaries[pair.left_id],
                    summaries[pair.right_id],
                    queries[pair.left_id],
                )
            )

    write_labels(_resolve(workspace, args.out_labels), out)
    if args.transcripts:
        atomic_write_text(
            _resolve(workspace, args.transcripts),
            "".join(json.dumps(t, sort_keys=True) + "\n" for t in labeller.transcripts),
        )
    labeller.close()
    if failures:
        for failure in failures:
            print(f"labelling failed: {failure['target']}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _pairs_for_origin(pairs: list[PreferencePair], origin: str) -> list[PreferencePair]:
    if origin == "all":
        return pairs
    return [p for p in pairs if p.origin == origin]


def _attach_preferences(
    pairs: list[PreferencePair], preferences: list[PreferenceRecord]
) -> list[PreferencePair]:
    """Merge preference records from a label file into their pairs."""
    by_pair: dict[str, list[PreferenceRecord]] = {}
    for pref in preferences:
        by_pair.setdefault(pref.pair_id, []).append(pref)
    out = []
    for pair in pairs:
        extra = tuple(by_pair.get(pair.pair_id, ()))
        merged = pair.preferences + tuple(
            p for p in extra if p not in pair.preferences
        )
        out.append(
            PreferencePair(
                pair.pair_id, pair.query_id, pair.left_id, pair.right_id, merged, pair.origin
            )
        )
    return out


def cmd_fit(args: argparse.Namespace, workspace: Path) -> int:
    items = read_summaries(_resolve(workspace, args.summaries))
    summaries = {summary.id: summary for _, summary in items}
    scores, _, preferences = _load_scores(_resolve(workspace, args.labels), args.policy)
    pairs = _attach_preferences(
        read_pairs(_resolve(workspace, args.pairs)), preferences
    )
    pairs = [p for p in _pairs_for_origin(pairs, args.origin) if p.preferences]
    if not pairs:
        print("no pairs with preference records to fit on", file=sys.stderr)
        return EXIT_DATA
    comps = _load_comps(_resolve(workspace, args.comps))
    mask = tuple(args.mask.split(",")) if args.mask else FEATURE_NAMES
    cfg = FitConfig(
        l2_lambda=args.l2,
        max_iters=args.max_iters,
        tolerance=args.tol,
        project_nonnegative=not args.no_project,
        feature_mask=mask,
    )
    weights, result = fit_sgss_weights(
        pairs, summaries, scores, comps, _lmax_from_args(args), cfg
    )
    write_json(_resolve(workspace, args.out), weights.to_dict(fit=result.to_fit_dict(cfg)))
    if not result.converged:
        print("fit did not converge", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, workspace: Path) -> int:
    items = read_summaries(_resolve(workspace, args.summaries))
    summaries = {summary.id: summary for _, summary in items}
    scores, _, preferences = _load_scores(_resolve(workspace, args.labels), args.policy)
    pairs = _attach_preferences(read_pairs(_resolve(workspace, args.pairs)), preferences)
    pairs = [p for p in _pairs_for_origin(pairs, args.origin) if p.preferences]
    if not pairs:
        print("no pairs with preference records to evaluate", file=sys.stderr)
        return EXIT_DATA
    comps = _load_comps(_resolve(workspace, args.comps))
    weights = _load_weights(_resolve(workspace, args.weights))
    report = evaluate_pairs(
        pairs, summaries, scores, weights, comps, _lmax_from_args(args)
    )
    write_json(_resolve(workspace, args.out), report.to_dict())
    print(f"MAR {report.mar:.4f} over {len(report.pairs)} pairs ({report.ties} ties)")
    return EXIT_OK


def cmd_plot_data(args: argparse.Namespace, workspace: Path) -> int:
    reports = read_json(_resolve(workspace, args.reports))
    comps = _load_comps(_resolve(workspace, args.comps))
    weights = _load_weights(_resolve(workspace, args.weights))
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["summary_id", "query_id", "xux", "comp", "sgss"])
    for report in reports:
        sid = report["summary_id"]
        if sid not in comps and args.comps is not None:
            print(f"no comp value for summary {sid}", file=sys.stderr)
            return EXIT_DATA
        comp_value = comps.get(sid, 0.0)
        sgss = report["xux"] + weights.w_comp * comp_value
        writer.writerow([sid, report["query_id"], repr(report["xux"]), repr(comp_value), repr(sgss)])
    atomic_write_text(_resolve(workspace, args.out), buffer.getvalue())
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, workspace: Path) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Workspace(workspace), ui_dir=_resolve(workspace, args.ui_dir))
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgss", description=__doc__)
    parser.add_argument("--workspace", default=".", help="directory file arguments resolve against")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute per-summary experience reports")
    p.add_argument("--summaries", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--policy", default="combined", choices=["human_only", "llm_only", "combined"])
    p.add_argument("--out", required=True)
    _add_lmax_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("comp", help="pool sections and compute comprehensiveness")
    p.add_argument("--summaries", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--policy", default="combined", choices=["human_only", "llm_only", "combined"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_comp)

    p = sub.add_parser("pool", help="emit the pool skeleton and cells needing labels")
    p.add_argument("--summaries", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("degrade", help="derive degraded summaries, labels, and pairs")
    p.add_argument("--summaries", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--strategy", required=True, choices=["noheadings", "nosection1"])
    p.add_argument("--out-summaries", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--out-pairs", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("label-llm", help="collect labels from a text-generation endpoint")
    p.add_argument("--summaries", required=True)
    p.add_argument("--pairs", default=None)
    p.add_argument("--pool", action="store_true", help="also label pooled-section relevance")
    p.add_argument("--endpoint", default="http://localhost:8080/v1/label")
    p.add_argument("--model", default="labeller")
    p.add_argument("--mock", action="store_true", help="use the built-in deterministic endpoint")
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--transcripts", default=None)
    p.set_defaults(func=cmd_label_llm)

    p = sub.add_parser("fit", help="fit the seven weights from preference pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--comps", default=None)
    p.add_argument("--policy", default="combined", choices=["human_only", "llm_only", "combined"])
    p.add_argument("--origin", default="all", choices=["all", "annotated", "derived_degradation"])
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--no-project", action="store_true")
    p.add_argument("--mask", default=None, help="comma-separated feature subset")
    p.add_argument("--out", required=True)
    _add_lmax_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="agreement of the fitted score with preferences")
    p.add_argument("--pairs", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--comps", default=None)
    p.add_argument("--weights", default=None)
    p.add_argument("--policy", default="combined", choices=["human_only", "llm_only", "combined"])
    p.add_argument("--origin", default="all", choices=["all", "annotated", "derived_degradation"])
    p.add_argument("--out", required=True)
    _add_lmax_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot-data", help="CSV of XUX vs comprehensiveness per summary")
    p.add_argument("--reports", required=True)
    p.add_argument("--comps", default=None)
    p.add_argument("--weights", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", default=None, help="directory with the built annotation UI")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    workspace = Path(args.workspace)
    try:
        return args.func(args, workspace)
    except SgssError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
