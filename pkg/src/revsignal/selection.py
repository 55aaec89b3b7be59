"""Feature selection: recursive elimination with temporal folds, plus the
five importance measures (information gain, Gini importance, gain ratio,
chi-squared, RReliefF).

Information gain, gain ratio, and chi-squared operate on 10-bin
equal-frequency discretizations of continuous features; boolean features are
left untouched. RReliefF uses k=10 neighbors, every instance as an update
candidate, uniform neighbor weights, and Euclidean distances on standardized
features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .learners import Matrix, ModelSpec, grid_search, score_model, train
from .learners.base import Standardizer

RFE_TIE_TOLERANCE = 1e-9


class InsufficientFolds(ValueError):
    pass


class DegenerateDiscretization(ValueError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"feature {feature!r} has fewer than 2 distinct values")


@dataclass(frozen=True)
class ImportanceReport:
    task: str
    features: tuple[str, ...]
    information_gain: tuple[float, ...]  # bits
    gini_importance: tuple[float, ...]
    gain_ratio: tuple[float, ...]
    chi_squared: tuple[float, ...]
    rrelieff: tuple[float, ...]
    degenerate: tuple[str, ...] = ()  # features recorded with score 0

    def row(self, feature: str) -> dict[str, float]:
        i = self.features.index(feature)
        return {
            "information_gain": self.information_gain[i],
            "gini_importance": self.gini_importance[i],
            "gain_ratio": self.gain_ratio[i],
            "chi_squared": self.chi_squared[i],
            "rrelieff": self.rrelieff[i],
        }


@dataclass(frozen=True)
class RFEStep:
    features: tuple[str, ...]
    mean_score: float
    removed: str | None  # feature eliminated after scoring this set


@dataclass(frozen=True)
class RFEResult:
    selected: tuple[str, ...]
    steps: tuple[RFEStep, ...]
    winning_score: float

    @property
    def eliminated(self) -> tuple[str, ...]:
        return tuple(s.removed for s in self.steps if s.removed is not None and s.removed not in self.selected)


# ---------------------------------------------------------------------------
# Recursive feature elimination


def _fold_matrices(fold, columns):
    (X_train, y_train), (X_val, y_val) = fold
    return X_train.select(columns), y_train, X_val.select(columns), y_val


def rfe(
    family: str,
    grid: Sequence[dict] | None,
    folds: Sequence[tuple[tuple[Matrix, np.ndarray], tuple[Matrix, np.ndarray]]],
    scoring: str,
    seed: int = 0,
    n_jobs: int = 1,
) -> RFEResult:
    """Walk-forward recursive feature elimination.

    Each fold is ((X_train, y_train), (X_val, y_val)) with the validation
    interval strictly after the training interval. At each feature count the
    model is trained per fold and the mean validation score recorded; the
    feature with the lowest mean model importance (|standardized weight| for
    linear families, Gini importance for forests) is dropped. The winning
    feature count maximizes the mean score; ties within 1e-9 keep more
    features.
    """
    if len(folds) < 2:
        raise InsufficientFolds(f"need >= 2 temporal folds, got {len(folds)}")
    columns = list(folds[0][0][0].columns)
    if len(columns) < 2:
        raise ValueError("need >= 2 features to eliminate from")

    # hyperparameters fixed across the elimination: single-cell grids are used
    # as-is, larger grids resolved once on the first fold
    cells = list(grid) if grid is not None else None
    if cells is not None and len(cells) == 1:
        spec = ModelSpec.make(family, cells[0], seed=seed)
    else:
        X_tr, y_tr, X_va, y_va = _fold_matrices(folds[0], columns)
        spec = grid_search(family, cells, X_tr, y_tr, X_va, y_va, scoring, seed=seed, n_jobs=n_jobs)

    steps: list[RFEStep] = []
    current = list(columns)
    while True:
        scores = []
        importances = np.zeros(len(current))
        for fold in folds:
            X_tr, y_tr, X_va, y_va = _fold_matrices(fold, current)
            model = train(spec, X_tr, y_tr, n_jobs=n_jobs)
            scores.append(score_model(model, X_va, y_va, scoring))
            importances += model.feature_importances()
        mean_score = float(np.mean(scores))
        if len(current) == 1:
            steps.append(RFEStep(tuple(current), mean_score, None))
            break
        weakest = current[int(np.argmin(importances))]
        steps.append(RFEStep(tuple(current), mean_score, weakest))
        current = [c for c in current if c != weakest]

    best = max(s.mean_score for s in steps)
    winner = next(s for s in steps if s.mean_score >= best - RFE_TIE_TOLERANCE)  # earliest = most features
    return RFEResult(selected=winner.features, steps=tuple(steps), winning_score=winner.mean_score)


# ---------------------------------------------------------------------------
# Discretization and classical measures


def is_boolean(values: np.ndarray) -> bool:
    return bool(np.all((values == 0) | (values == 1)))


def equal_frequency_bins(values: np.ndarray, n_bins: int = 10) -> np.ndarray:
    """Bin ids after equal-frequency discretization; booleans pass through.

    Raises DegenerateDiscretization (caller records score 0) when the
    feature has fewer than 2 distinct values.
    """
    if np.unique(values).size < 2:
        raise DegenerateDiscretization("<anonymous>")
    if is_boolean(values):
        return values.astype(np.int64)
    quantiles = np.quantile(values, np.linspace(0, 1, n_bins + 1)[1:-1])
    edges = np.unique(quantiles)
    return np.searchsorted(edges, values, side="right").astype(np.int64)


def _entropy(codes: np.ndarray) -> float:
    counts = np.bincount(codes)
    p = counts[counts > 0] / codes.size
    return float(-np.sum(p * np.log2(p)))


def _joint_codes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a * (b.max() + 1) + b


def information_gain(feature_codes: np.ndarray, label_codes: np.ndarray) -> float:
    """H(Y) - H(Y | X) in bits."""
    h_y = _entropy(label_codes)
    h_xy = _entropy(_joint_codes(feature_codes, label_codes))
    h_x = _entropy(feature_codes)
    return max(0.0, h_y - (h_xy - h_x))


def gain_ratio(feature_codes: np.ndarray, label_codes: np.ndarray) -> float:
    h_x = _entropy(feature_codes)
    if h_x == 0:
        return 0.0
    return information_gain(feature_codes, label_codes) / h_x


def chi_squared(feature_codes: np.ndarray, label_codes: np.ndarray) -> float:
    """Pearson chi-squared statistic of the feature-label contingency table."""
    n_f = int(feature_codes.max()) + 1
    n_l = int(label_codes.max()) + 1
    observed = np.zeros((n_f, n_l))
    np.add.at(observed, (feature_codes, label_codes), 1.0)
    row = observed.sum(axis=1, keepdims=True)
    col = observed.sum(axis=0, keepdims=True)
    expected = row @ col / observed.sum()
    mask = expected > 0
    return float(np.sum((observed[mask] - expected[mask]) ** 2 / expected[mask]))


# ---------------------------------------------------------------------------
# RReliefF


def rrelieff(
    values: np.ndarray,
    targets: np.ndarray,
    k: int = 10,
    chunk: int = 256,
) -> np.ndarray:
    """RReliefF weights in [-1, 1] for a continuous (or 0/1) target.

    All instances serve as update candidates; the k nearest neighbors (by
    Euclidean distance on standardized features) contribute with uniform
    weight. Attribute and target differences are range-normalized.
    """
    X = np.asarray(values, dtype=float)
    y = np.asarray(targets, dtype=float)
    n, d = X.shape
    if n < 2:
        return np.zeros(d)
    k = min(k, n - 1)

    Z = Standardizer.fit(X).transform(X)
    ranges = X.max(axis=0) - X.min(axis=0)
    ranges = np.where(ranges > 0, ranges, 1.0)
    y_range = y.max() - y.min()
    if y_range == 0:
        return np.zeros(d)

    n_dc = 0.0
    n_da = np.zeros(d)
    n_dcda = np.zeros(d)
    w_per_neighbor = 1.0 / k

    z_sq = np.sum(Z**2, axis=1)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = slice(start, stop)
        d2 = z_sq[block, None] + z_sq[None, :] - 2.0 * (Z[block] @ Z.T)
        rows = np.arange(stop - start)
        d2[rows, np.arange(start, stop)] = np.inf  # never your own neighbor
        neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]

        dt = np.abs(y[neighbors] - y[block, None]) / y_range  # (b, k)
        da = np.abs(X[neighbors] - X[block][:, None, :]) / ranges  # (b, k, d)
        n_dc += float(np.sum(dt)) * w_per_neighbor
        n_da += np.sum(da, axis=(0, 1)) * w_per_neighbor
        n_dcda += np.einsum("bk,bkd->d", dt, da) * w_per_neighbor

    m = float(n)  # total update weight: each instance contributes k * (1/k)
    if n_dc == 0 or n_dc >= m:
        return np.zeros(d)
    return n_dcda / n_dc - (n_da - n_dcda) / (m - n_dc)


# ---------------------------------------------------------------------------
# Combined importance report


def importance(examples, task: str, seed: int = 0, n_trees: int = 100, n_jobs: int = 1) -> ImportanceReport:
    """All five measures for every feature, against the task's target.

    Participation: classical measures against the binary label, Gini
    importance from a classification forest, RReliefF on the 0/1 target.
    Feedback: classical measures against the 10-bin discretized log target,
    Gini from a regression forest, RReliefF on the continuous target.
    """
    from .features import FEATURE_NAMES
    from .learners import labels_from_examples, matrix_from_examples

    if len(examples) < 20:
        raise ValueError(f"need >= 20 examples for importance estimates, got {len(examples)}")

    X = matrix_from_examples(examples, FEATURE_NAMES)
    if task == "participation":
        y = labels_from_examples(examples, "participation")
        label_codes = y.astype(np.int64)
        target = y.astype(float)
        forest_family = "random_forest_clf"
    elif task == "feedback":
        target = labels_from_examples(examples, "feedback")
        label_codes = equal_frequency_bins(target) if np.unique(target).size >= 2 else np.zeros(len(target), np.int64)
        forest_family = "random_forest_reg"
    else:
        raise ValueError(f"unknown task {task!r}")

    info, ratio, chi2 = [], [], []
    degenerate = []
    for j, name in enumerate(X.columns):
        col = X.values[:, j]
        try:
            codes = equal_frequency_bins(col)
        except DegenerateDiscretization:
            degenerate.append(name)
            info.append(0.0)
            ratio.append(0.0)
            chi2.append(0.0)
            continue
        info.append(information_gain(codes, label_codes))
        ratio.append(gain_ratio(codes, label_codes))
        chi2.append(chi_squared(codes, label_codes))

    spec = ModelSpec.make(forest_family, {"n_trees": n_trees, "max_depth": None, "min_leaf": 1}, seed=seed)
    forest = train(spec, X, target if task == "feedback" else labels_from_examples(examples, "participation"), n_jobs=n_jobs)
    gini = forest.feature_importances()

    relief = rrelieff(X.values, target)

    return ImportanceReport(
        task=task,
        features=tuple(X.columns),
        information_gain=tuple(info),
        gini_importance=tuple(float(g) for g in gini),
        gain_ratio=tuple(ratio),
        chi_squared=tuple(chi2),
        rrelieff=tuple(float(r) for r in relief),
        degenerate=tuple(degenerate),
    )
