"""Classification and regression performance metrics.

Metrics whose denominator vanishes are UNDEFINED (represented as None), a
first-class value that reports must render as "-" and never fold into 0.
AUPRC is step-interpolated average precision with score ties grouped, so the
value is invariant under permutations of tied items.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

UNDEFINED = None


class LengthMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class ClassificationReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float | None
    recall: float | None
    f1: float | None
    auprc: float | None


@dataclass(frozen=True)
class RegressionReport:
    rmse: float
    pearson_r: float | None
    r2: float | None


def fmt_metric(value: float | None, digits: int = 4) -> str:
    """Serialize a metric value; UNDEFINED renders as '-'."""
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def average_precision(labels: Sequence[bool], scores: Sequence[float]) -> float | None:
    """Sum of (delta recall) * precision over the score-ranked sequence.

    Tied scores enter as one block. UNDEFINED when there is no positive.
    """
    y = np.asarray(labels, dtype=bool)
    s = np.asarray(scores, dtype=float)
    if y.size != s.size:
        raise LengthMismatch(f"{y.size} labels vs {s.size} scores")
    if y.size == 0:
        raise EmptyInput("no scored items")
    n_pos = int(y.sum())
    if n_pos == 0:
        return UNDEFINED

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # block boundaries: last index of each group of equal scores
    boundary = np.nonzero(np.append(s_sorted[1:] != s_sorted[:-1], True))[0]
    tp = np.cumsum(y_sorted)[boundary].astype(float)
    pp = (boundary + 1).astype(float)
    precision = tp / pp
    recall = tp / n_pos
    delta_recall = np.diff(np.concatenate(([0.0], recall)))
    return float(np.sum(delta_recall * precision))


def classification_report(
    labels: Sequence[bool],
    predictions: Sequence[bool],
    scores: Sequence[float],
) -> ClassificationReport:
    y = np.asarray(labels, dtype=bool)
    p = np.asarray(predictions, dtype=bool)
    if y.size == 0:
        raise EmptyInput("no examples")
    if y.size != p.size or y.size != len(scores):
        raise LengthMismatch(f"labels {y.size}, predictions {p.size}, scores {len(scores)}")

    tp = int(np.sum(p & y))
    fp = int(np.sum(p & ~y))
    tn = int(np.sum(~p & ~y))
    fn = int(np.sum(~p & y))

    precision = tp / (tp + fp) if tp + fp > 0 else UNDEFINED
    recall = tp / (tp + fn) if tp + fn > 0 else UNDEFINED
    if precision is None or recall is None or precision + recall == 0:
        f1 = UNDEFINED
    else:
        f1 = 2 * precision * recall / (precision + recall)

    return ClassificationReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        auprc=average_precision(labels, scores),
    )


def regression_report(targets: Sequence[float], predictions: Sequence[float]) -> RegressionReport:
    t = np.asarray(targets, dtype=float)
    p = np.asarray(predictions, dtype=float)
    if t.size == 0:
        raise EmptyInput("no examples")
    if t.size != p.size:
        raise LengthMismatch(f"targets {t.size} vs predictions {p.size}")

    rmse = float(np.sqrt(np.mean((t - p) ** 2)))

    if t.size < 2:
        return RegressionReport(rmse=rmse, pearson_r=UNDEFINED, r2=UNDEFINED)

    t_centered = t - t.mean()
    p_centered = p - p.mean()
    ss_tot = float(np.sum(t_centered**2))
    var_p = float(np.sum(p_centered**2))

    if ss_tot == 0 or var_p == 0:
        pearson_r = UNDEFINED
    else:
        pearson_r = float(np.sum(t_centered * p_centered) / math.sqrt(ss_tot * var_p))
        pearson_r = max(-1.0, min(1.0, pearson_r))

    if ss_tot == 0:
        r2 = UNDEFINED
    else:
        r2 = float(1.0 - np.sum((t - p) ** 2) / ss_tot)

    return RegressionReport(rmse=rmse, pearson_r=pearson_r, r2=r2)
