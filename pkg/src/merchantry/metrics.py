"""Appraisal and negotiation metrics.

Appraisal: signed percentage error, MAPE, population std-dev and skewness
of the error distribution, unexpected-output rate. Negotiation: dominance
(merchant's share of the bargaining range), agreement rate, judge-scored
persuasiveness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .backends import Backend, GenerationParams, judge_score
from .currency import CopperPrice
from .errors import ConfigError, EmptyInputError, SkewnessUndefinedError

JUDGE_RUNS = 20

DEFAULT_PERSUASIVENESS_RUBRIC = (
    "You will be shown one merchant utterance from a price negotiation in a "
    "fantasy game shop, together with the dialogue so far. Rate how "
    "persuasive the merchant utterance is on a 5-point scale, where 1 means "
    "not persuasive at all and 5 means extremely persuasive use of "
    "negotiation tactics. Reply with the number only."
)


def percentage_error(predicted: CopperPrice, actual: CopperPrice) -> float:
    """Signed relative error; positive means overestimate."""
    if actual <= 0:
        raise EmptyInputError("actual price must be positive")
    return (predicted - actual) / actual


def _errors(pairs: list[tuple[CopperPrice, CopperPrice]]) -> list[float]:
    if not pairs:
        raise EmptyInputError("no prediction pairs")
    return [percentage_error(p, a) for p, a in pairs]


def mape(pairs: list[tuple[CopperPrice, CopperPrice]]) -> float:
    """Mean absolute percentage error, in percent."""
    errors = _errors(pairs)
    return 100.0 * sum(abs(e) for e in errors) / len(errors)


def pe_std_dev(pairs: list[tuple[CopperPrice, CopperPrice]]) -> float:
    """Population standard deviation of percentage errors, in percent."""
    errors = _errors(pairs)
    if len(errors) < 2:
        raise EmptyInputError("std-dev needs at least 2 pairs")
    mu = sum(errors) / len(errors)
    return 100.0 * math.sqrt(sum((e - mu) ** 2 for e in errors) / len(errors))


def pe_skewness(pairs: list[tuple[CopperPrice, CopperPrice]]) -> float:
    """Population skewness of percentage errors (third standardized moment)."""
    errors = _errors(pairs)
    if len(errors) < 3:
        raise EmptyInputError("skewness needs at least 3 pairs")
    n = len(errors)
    mu = sum(errors) / n
    sigma = math.sqrt(sum((e - mu) ** 2 for e in errors) / n)
    if sigma == 0:
        raise SkewnessUndefinedError("zero variance in percentage errors")
    return sum(((e - mu) / sigma) ** 3 for e in errors) / n


def uor(outcomes: list[str]) -> float:
    """Unexpected-output rate in percent, over all appraisal outcomes."""
    if not outcomes:
        raise EmptyInputError("no appraisals")
    bad = sum(1 for outcome in outcomes if outcome != "single")
    return 100.0 * bad / len(outcomes)


def dominance(agreed: float, merchant: float, player: float) -> float:
    """Merchant's captured share of the bargaining range; not clipped."""
    if merchant <= player:
        raise ConfigError("merchant price must exceed player target")
    return (agreed - player) / (merchant - player)


def agreement_rate(statuses: list[str]) -> float:
    """Percent of non-aborted sessions that settled on a price."""
    if not statuses:
        raise EmptyInputError("no outcomes")
    agreed = sum(1 for status in statuses if status == "agreed")
    return 100.0 * agreed / len(statuses)


@dataclass(frozen=True)
class PersuasivenessResult:
    mean: float
    scores: list[int]
    missing_runs: int


def persuasiveness(
    utterance: str,
    context: str,
    judge_backend: Backend,
    runs: int = JUDGE_RUNS,
    rubric: str = DEFAULT_PERSUASIVENESS_RUBRIC,
    params: GenerationParams | None = None,
) -> PersuasivenessResult:
    """Mean judge score of one merchant utterance; missing runs are excluded."""
    subject = f"Dialogue so far:\n{context}\n\nMerchant utterance to rate:\n{utterance}"
    scores = judge_score(judge_backend, rubric, subject, runs=runs, params=params)
    return PersuasivenessResult(
        mean=sum(scores) / len(scores),
        scores=scores,
        missing_runs=runs - len(scores),
    )


def _mean_std(values: list[float]) -> tuple[float, float]:
    mu = sum(values) / len(values)
    return mu, math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


@dataclass(frozen=True)
class AppraisalReport:
    mape: float
    std_dev: float
    skewness: float
    uor: float
    n_items: int
    n_unexpected: int

    def to_dict(self) -> dict:
        return {
            "mape": self.mape,
            "std_dev": self.std_dev,
            "skewness": self.skewness,
            "uor": self.uor,
            "n_items": self.n_items,
            "n_unexpected": self.n_unexpected,
        }


def appraisal_report(
    rows: list[dict], truth: dict[str, CopperPrice]
) -> AppraisalReport:
    """Aggregate persisted appraisal rows against true prices.

    MAPE/std/skewness use single-outcome rows only; UOR uses all rows.
    """
    if not rows:
        raise EmptyInputError("no appraisal rows")
    pairs = [
        (row["amount"], truth[row["item_id"]])
        for row in rows
        if row["outcome"] == "single" and row["item_id"] in truth
    ]
    n_unexpected = sum(1 for row in rows if row["outcome"] != "single")
    return AppraisalReport(
        mape=mape(pairs),
        std_dev=pe_std_dev(pairs),
        skewness=pe_skewness(pairs),
        uor=uor([row["outcome"] for row in rows]),
        n_items=len(rows),
        n_unexpected=n_unexpected,
    )


@dataclass(frozen=True)
class NegotiationReport:
    persuasiveness_mean: float
    persuasiveness_std: float
    dominance_mean: float
    dominance_std: float
    agreement: float
    n_utterances: int
    n_settled: int
    n_sessions: int
    n_aborted: int

    def to_dict(self) -> dict:
        return {
            "persuasiveness_mean": self.persuasiveness_mean,
            "persuasiveness_std": self.persuasiveness_std,
            "dominance_mean": self.dominance_mean,
            "dominance_std": self.dominance_std,
            "agreement": self.agreement,
            "n_utterances": self.n_utterances,
            "n_settled": self.n_settled,
            "n_sessions": self.n_sessions,
            "n_aborted": self.n_aborted,
        }


def negotiation_report(
    sessions: list,
    per_utterance_scores: list[list[int]],
) -> NegotiationReport:
    """Aggregate closed sessions plus judge scores into the report.

    ``sessions`` are NegotiationSession objects; aborted sessions count
    separately and are excluded from every metric denominator.
    """
    live = [s for s in sessions if s.aborted is None and s.outcome is not None]
    if not live:
        raise EmptyInputError("no completed sessions")
    statuses = [s.outcome.status for s in live]
    dominances = [
        dominance(
            s.outcome.agreed_price,
            s.config.merchant_price,
            s.config.player_target,
        )
        for s in live
        if s.outcome.status == "agreed"
    ]
    utterance_means = [sum(scores) / len(scores) for scores in per_utterance_scores if scores]
    p_mean, p_std = _mean_std(utterance_means) if utterance_means else (0.0, 0.0)
    d_mean, d_std = _mean_std(dominances) if dominances else (0.0, 0.0)
    return NegotiationReport(
        persuasiveness_mean=p_mean,
        persuasiveness_std=p_std,
        dominance_mean=d_mean,
        dominance_std=d_std,
        agreement=agreement_rate(statuses),
        n_utterances=len(utterance_means),
        n_settled=len(dominances),
        n_sessions=len(live),
        n_aborted=sum(1 for s in sessions if s.aborted is not None),
    )
