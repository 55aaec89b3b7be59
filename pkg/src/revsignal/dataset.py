"""Labeled (review, candidate) examples, undersampling, and temporal windows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .corpus import Corpus, ReviewRecord
from .features import FeatureVector, compute_features
from .timeline import TemporalIndex

SECONDS_PER_MONTH = 30 * 86_400  # months are 30-day blocks exactly

Phase = Literal["train", "test"]
Task = Literal["participation", "feedback"]


class InsufficientSpan(ValueError):
    pass


@dataclass(frozen=True)
class TrainingExample:
    review_id: str
    candidate_id: str  # metadata only, never a feature
    features: FeatureVector
    participated: bool
    comment_count: int
    log_feedback: float


@dataclass(frozen=True)
class WindowSpec:
    train_start: int
    train_end: int
    test_start: int
    test_end: int

    def __post_init__(self):
        if not (self.train_start < self.train_end <= self.test_start < self.test_end):
            raise ValueError(f"invalid window ordering: {self}")


@dataclass(frozen=True)
class SamplingConfig:
    rate: float
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.rate <= 1):
            raise ValueError(f"undersampling rate must be in (0, 1], got {self.rate}")


def candidate_pool(index: TemporalIndex, review: ReviewRecord) -> set[str]:
    """Developers employed when the review was created, minus its author."""
    pool = index.employed_at(review.created_at)
    pool.discard(review.author_id)
    return pool


def _example_for(index: TemporalIndex, review: ReviewRecord, candidate: str, window_start: float) -> TrainingExample:
    fv = compute_features(index, review, candidate, window_start)
    comment_count = sum(1 for c in review.comments if c.commenter_id == candidate and not c.is_bot)
    participated = candidate in index.reviewers_of(review.review_id)
    return TrainingExample(
        review_id=review.review_id,
        candidate_id=candidate,
        features=fv,
        participated=participated,
        comment_count=comment_count,
        log_feedback=math.log10(1 + comment_count),
    )


def build_examples(corpus: Corpus, index: TemporalIndex, window: WindowSpec, phase: Phase) -> list[TrainingExample]:
    """One example per (review in the phase interval, candidate in its pool).

    Both phases compute features with window_start = window.train_start so
    train and test share one history window. Output is sorted by
    (review_id, candidate_id) for order determinism.
    """
    if phase == "train":
        lo, hi = window.train_start, window.train_end
    elif phase == "test":
        lo, hi = window.test_start, window.test_end
    else:
        raise ValueError(f"unknown phase {phase!r}")

    out: list[TrainingExample] = []
    for review in corpus.reviews:
        if not (lo <= review.created_at < hi):
            continue
        for candidate in sorted(candidate_pool(index, review)):
            out.append(_example_for(index, review, candidate, window.train_start))
    out.sort(key=lambda ex: (ex.review_id, ex.candidate_id))
    return out


def feedback_subset(examples: Sequence[TrainingExample], include_nonparticipants: bool = False) -> list[TrainingExample]:
    """Examples used by the feedback regression: participants only by default."""
    if include_nonparticipants:
        return list(examples)
    return [ex for ex in examples if ex.participated]


def undersample(examples: Sequence[TrainingExample], cfg: SamplingConfig) -> list[TrainingExample]:
    """Keep all positives and round(rate * N_neg) negatives (half-up, min 1).

    Negatives are chosen uniformly without replacement by the seeded
    generator; output preserves the original order.
    """
    neg_positions = [i for i, ex in enumerate(examples) if not ex.participated]
    n_neg = len(neg_positions)
    if n_neg == 0 or cfg.rate == 1.0:
        return list(examples)
    n_keep = max(1, int(math.floor(cfg.rate * n_neg + 0.5)))
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    chosen = rng.choice(n_neg, size=n_keep, replace=False)
    keep = set(neg_positions[int(i)] for i in chosen)
    return [ex for i, ex in enumerate(examples) if ex.participated or i in keep]


def make_windows(
    corpus_span: tuple[int, int],
    timeframe_months: int,
    n_periods: int,
    period_months: int = 3,
    first_test_start: int | None = None,
) -> list[WindowSpec]:
    """Walk-forward windows: test period k preceded by a timeframe-long train.

    By default the first test period starts timeframe_months after the span
    start; first_test_start overrides the anchor so several timeframes can
    share identical test periods.
    """
    if n_periods == 0:
        return []
    if timeframe_months <= 0 or n_periods < 0 or period_months <= 0:
        raise ValueError("timeframe, n_periods, and period_months must be positive")
    span_start, span_end = corpus_span
    timeframe = timeframe_months * SECONDS_PER_MONTH
    period = period_months * SECONDS_PER_MONTH
    anchor = span_start + timeframe if first_test_start is None else first_test_start

    windows = []
    for k in range(n_periods):
        test_start = anchor + k * period
        w = WindowSpec(
            train_start=test_start - timeframe,
            train_end=test_start,
            test_start=test_start,
            test_end=test_start + period,
        )
        if w.train_start < span_start or w.test_end > span_end:
            raise InsufficientSpan(
                f"window {k} [{w.train_start}, {w.test_end}) exceeds corpus span [{span_start}, {span_end})"
            )
        windows.append(w)
    return windows
