"""Combined summary score, pairwise weight fitting, and agreement evaluation.

The combined score is a linear function of seven per-criterion features, so
the score difference of a summary pair is too; its weights are fitted by
logistic regression (no intercept) against pairwise preference fractions.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .labels import LEFT, RIGHT, AggregatedScores, PreferenceRecord
from .model import StructuredSummary
from .xux import LmaxConfig, XuxWeights, compute_report

FEATURE_NAMES = ("os", "of", "or", "hr", "srel", "sf", "comp")


@dataclass(frozen=True)
class SgssWeights:
    xux: XuxWeights = XuxWeights()
    w_comp: float = 1.0

    def __post_init__(self) -> None:
        if self.w_comp < 0:
            raise DataError(f"w_comp must be non-negative, got {self.w_comp}")

    def as_array(self) -> np.ndarray:
        return np.array(self.xux.as_tuple() + (self.w_comp,), dtype=float)

    def to_dict(self, fit: Optional[dict] = None) -> dict:
        doc = {
            "w_os": self.xux.w_os,
            "w_of": self.xux.w_of,
            "w_or": self.xux.w_or,
            "w_hr": self.xux.w_hr,
            "w_srel": self.xux.w_srel,
            "w_sf": self.xux.w_sf,
            "w_comp": self.w_comp,
            "normalized_mode": self.xux.normalized_mode,
        }
        if fit is not None:
            doc["fit"] = fit
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SgssWeights":
        return cls(
            xux=XuxWeights(
                w_os=doc["w_os"],
                w_of=doc["w_of"],
                w_or=doc["w_or"],
                w_hr=doc["w_hr"],
                w_srel=doc["w_srel"],
                w_sf=doc["w_sf"],
                normalized_mode=doc.get("normalized_mode", False),
            ),
            w_comp=doc["w_comp"],
        )

    @classmethod
    def from_array(cls, w: Sequence[float], normalized_mode: bool = False) -> "SgssWeights":
        w = list(w)
        return cls(
            xux=XuxWeights(w[0], w[1], w[2], w[3], w[4], w[5], normalized_mode=normalized_mode),
            w_comp=w[6],
        )


ANNOTATED = "annotated"
DERIVED_DEGRADATION = "derived_degradation"


@dataclass(frozen=True)
class PreferencePair:
    pair_id: str
    query_id: str
    left_id: str
    right_id: str
    preferences: tuple[PreferenceRecord, ...] = ()
    origin: str = ANNOTATED


def sgss_score(
    summary: StructuredSummary,
    scores: AggregatedScores,
    weights: SgssWeights,
    comp: float,
    lmax: LmaxConfig = LmaxConfig.unbounded(),
) -> float:
    if not 0.0 <= comp <= 1.0:
        raise DataError(f"comp must be in [0,1], got {comp}")
    report = compute_report(summary, scores, weights.xux, lmax)
    return report.xux + weights.w_comp * comp


def delta_sgss(
    left: StructuredSummary,
    right: StructuredSummary,
    scores: AggregatedScores,
    weights: SgssWeights,
    comps: dict[str, float],
    lmax: LmaxConfig = LmaxConfig.unbounded(),
) -> float:
    if left.query_id != right.query_id:
        raise DataError(
            f"pair spans two queries: {left.query_id} vs {right.query_id}"
        )
    return sgss_score(left, scores, weights, comps.get(left.id, 0.0), lmax) - sgss_score(
        right, scores, weights, comps.get(right.id, 0.0), lmax
    )


def feature_vector(
    left: StructuredSummary,
    right: StructuredSummary,
    scores: AggregatedScores,
    comps: dict[str, float],
    lmax: LmaxConfig = LmaxConfig.unbounded(),
) -> np.ndarray:
    """Per-criterion score differences; delta_sgss = weights . feature_vector."""
    if left.query_id != right.query_id:
        raise DataError(
            f"pair spans two queries: {left.query_id} vs {right.query_id}"
        )
    phi_left = compute_report(left, scores, lmax=lmax).phi
    phi_right = compute_report(right, scores, lmax=lmax).phi
    deltas = [phi_left[c] - phi_right[c] for c in FEATURE_NAMES[:-1]]
    deltas.append(comps.get(left.id, 0.0) - comps.get(right.id, 0.0))
    return np.array(deltas, dtype=float)


@dataclass(frozen=True)
class FitConfig:
    l2_lambda: float = 1e-3
    max_iters: int = 10000
    tolerance: float = 1e-8
    project_nonnegative: bool = True
    feature_mask: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self) -> None:
        if self.l2_lambda < 0:
            raise DataError("l2_lambda must be >= 0")
        if not self.feature_mask:
            raise DataError("feature mask must name at least one feature")
        unknown = set(self.feature_mask) - set(FEATURE_NAMES)
        if unknown:
            raise DataError(f"unknown features in mask: {sorted(unknown)}")


@dataclass(frozen=True)
class FitResult:
    weights: np.ndarray
    loss: float
    iterations: int
    converged: bool
    loss_history: tuple[float, ...] = ()

    def to_fit_dict(self, cfg: FitConfig) -> dict:
        return {
            "lambda": cfg.l2_lambda,
            "iters": self.iterations,
            "loss": self.loss,
            "converged": self.converged,
        }


def _loss_and_grad(
    w: np.ndarray, features: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    z = features @ w
    # log sigma(z) = -log(1 + e^-z), log(1 - sigma(z)) = -log(1 + e^z)
    log_sig = -np.logaddexp(0.0, -z)
    log_one_minus = -np.logaddexp(0.0, z)
    loss = -(y * log_sig + (1 - y) * log_one_minus).sum() + l2 * float(w @ w)
    sig = 1.0 / (1.0 + np.exp(-z))
    grad = features.T @ (sig - y) + 2.0 * l2 * w
    return float(loss), grad


def fit_weights(
    features: np.ndarray, targets: np.ndarray, cfg: FitConfig = FitConfig()
) -> FitResult:
    """Projected-gradient logistic regression on pair feature differences.

    No intercept: swapping a pair's sides negates its features and must flip
    the predicted preference probability. Backtracking line search keeps the
    loss non-increasing; an optional projection keeps all weights >= 0.
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if features.ndim != 2 or features.shape[1] != len(FEATURE_NAMES):
        raise DataError(f"features must have shape (n, 7), got {features.shape}")
    if len(features) == 0:
        raise DataError("empty training set")
    if not np.any(features):
        raise DataError("all feature vectors are zero; nothing to fit")

    mask = np.array([name in cfg.feature_mask for name in FEATURE_NAMES])

    def project(w: np.ndarray) -> np.ndarray:
        w = np.where(mask, w, 0.0)
        if cfg.project_nonnegative:
            w = np.maximum(w, 0.0)
        return w

    w = np.zeros(len(FEATURE_NAMES))
    loss, grad = _loss_and_grad(w, features, targets, cfg.l2_lambda)
    history = [loss]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        step = 1.0
        accepted = False
        for _ in range(60):
            candidate = project(w - step * grad)
            cand_loss, cand_grad = _loss_and_grad(candidate, features, targets, cfg.l2_lambda)
            displacement = w - candidate
            # Sufficient decrease relative to the projected step.
            if cand_loss <= loss - 1e-4 * float(grad @ displacement) + 1e-15:
                accepted = True
                break
            step /= 2.0
        if not accepted:
            converged = True
            break
        moved = float(np.linalg.norm(w - candidate))
        w, loss, grad = candidate, cand_loss, cand_grad
        history.append(loss)
        projected_grad = np.linalg.norm(w - project(w - grad))
        if projected_grad <= cfg.tolerance or moved <= cfg.tolerance * (1 + np.linalg.norm(w)):
            converged = True
            break
    return FitResult(
        weights=w,
        loss=loss,
        iterations=iterations,
        converged=converged,
        loss_history=tuple(history),
    )


def pair_target(pair: PreferencePair) -> float:
    """Fraction of labellers preferring the left side."""
    if not pair.preferences:
        raise DataError(f"pair {pair.pair_id} has no preference records")
    lefts = sum(1 for p in pair.preferences if p.choice == LEFT)
    return lefts / len(pair.preferences)


def fit_sgss_weights(
    pairs: Sequence[PreferencePair],
    summaries: dict[str, StructuredSummary],
    scores: AggregatedScores,
    comps: dict[str, float],
    lmax: LmaxConfig = LmaxConfig.unbounded(),
    cfg: FitConfig = FitConfig(),
) -> tuple[SgssWeights, FitResult]:
    if not pairs:
        raise DataError("empty training set")
    features = np.stack(
        [
            feature_vector(summaries[p.left_id], summaries[p.right_id], scores, comps, lmax)
            for p in pairs
        ]
    )
    targets = np.array([pair_target(p) for p in pairs])
    result = fit_weights(features, targets, cfg)
    return SgssWeights.from_array(result.weights), result


def agreement_rate(
    preferences: Sequence[PreferenceRecord], delta: float, tie_credit: float = 0.0
) -> float:
    """Fraction of preference labels whose direction matches sign(delta).

    A zero delta agrees with nobody by default (tie_credit 0.0); half credit
    is available for a softer tie rule.
    """
    if not preferences:
        raise DataError("agreement rate needs at least one preference record")
    if delta == 0.0:
        return tie_credit
    predicted = LEFT if delta > 0 else RIGHT
    matches = sum(1 for p in preferences if p.choice == predicted)
    return matches / len(preferences)


@dataclass(frozen=True)
class EvalReport:
    pairs: tuple[dict, ...]  # {pair_id, delta, ar}
    mar: float
    ties: int

    def to_dict(self) -> dict:
        return {"pairs": list(self.pairs), "mar": self.mar, "ties": self.ties}


def evaluate_pairs(
    pairs: Sequence[PreferencePair],
    summaries: dict[str, StructuredSummary],
    scores: AggregatedScores,
    weights: SgssWeights,
    comps: dict[str, float],
    lmax: LmaxConfig = LmaxConfig.unbounded(),
    tie_credit: float = 0.0,
) -> EvalReport:
    if not pairs:
        raise DataError("no pairs to evaluate")
    rows = []
    ties = 0
    for pair in pairs:
        delta = delta_sgss(
            summaries[pair.left_id], summaries[pair.right_id], scores, weights, comps, lmax
        )
        if delta == 0.0:
            ties += 1
        rows.append(
            {
                "pair_id": pair.pair_id,
                "delta": delta,
                "ar": agreement_rate(pair.preferences, delta, tie_credit),
            }
        )
    mar = sum(r["ar"] for r in rows) / len(rows)
    return EvalReport(pairs=tuple(rows), mar=mar, ties=ties)


def mean_agreement_rate(
    pairs: Sequence[PreferencePair],
    summaries: dict[str, StructuredSummary],
    scores: AggregatedScores,
    weights: SgssWeights,
    comps: dict[str, float],
    lmax: LmaxConfig = LmaxConfig.unbounded(),
) -> float:
    return evaluate_pairs(pairs, summaries, scores, weights, comps, lmax).mar


def train_test_split(
    pairs: Sequence[PreferencePair], ratio: float, seed: int
) -> tuple[list[PreferencePair], list[PreferencePair]]:
    """Deterministic split by query id; no query appears on both sides."""
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be in (0,1), got {ratio}")
    queries = sorted({p.query_id for p in pairs})
    if len(queries) < 2:
        raise DataError(f"need at least 2 queries to split, got {len(queries)}")
    rng = random.Random(seed)
    rng.shuffle(queries)
    n_train = min(max(round(ratio * len(queries)), 1), len(queries) - 1)
    train_queries = set(queries[:n_train])
    train = [p for p in pairs if p.query_id in train_queries]
    test = [p for p in pairs if p.query_id not in train_queries]
    return train, test
