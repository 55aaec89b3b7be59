"""Hyperparameter grid search scored on a held-out (future) validation set."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..metrics import classification_report, regression_report
from .base import AllCellsFailed, Matrix, ModelSpec

# Enumeration order is the tie-break order: earlier cells win ties.
DEFAULT_GRIDS: dict[str, list[dict]] = {
    "logistic_regression": [{"l2": l2} for l2 in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)],
    "linear_svc": [{"C": c} for c in (0.01, 0.1, 1.0, 10.0)],
    "random_forest_clf": [
        {"n_trees": 100, "max_depth": depth, "min_leaf": leaf}
        for depth in (None, 10, 20)
        for leaf in (1, 5)
    ],
    "random_forest_reg": [
        {"n_trees": 100, "max_depth": depth, "min_leaf": leaf}
        for depth in (None, 10, 20)
        for leaf in (1, 5)
    ],
    "knn_reg": [{"k": k} for k in (3, 5, 11, 21)],
    "linear_reg": [{}],
}


def default_grid(family: str) -> list[dict]:
    return [dict(cell) for cell in DEFAULT_GRIDS[family]]


def score_model(model, X: Matrix, y: np.ndarray, scoring: str) -> float:
    """Validation score; UNDEFINED F1 counts as 0, UNDEFINED R2 as -inf."""
    if scoring == "F1":
        report = classification_report(y, model.predict_labels(X), model.predict_scores(X))
        return report.f1 if report.f1 is not None else 0.0
    if scoring == "R2":
        report = regression_report(y, model.predict_values(X))
        return report.r2 if report.r2 is not None else float("-inf")
    raise ValueError(f"unknown scoring {scoring!r}")


def grid_search(
    family: str,
    grid: Sequence[dict] | None,
    X_train: Matrix,
    y_train: np.ndarray,
    X_val: Matrix,
    y_val: np.ndarray,
    scoring: str,
    seed: int = 0,
    n_jobs: int = 1,
) -> ModelSpec:
    """Spec maximizing the validation score; ties go to the earlier cell.

    Failing cells are skipped; AllCellsFailed if none trains.
    """
    from . import train  # avoid import cycle

    cells = list(grid) if grid is not None else default_grid(family)
    if not cells:
        raise ValueError("empty hyperparameter grid")

    best_spec = None
    best_score = float("-inf")
    errors: list[str] = []
    for cell in cells:
        spec = ModelSpec.make(family, cell, seed=seed)
        try:
            model = train(spec, X_train, y_train, n_jobs=n_jobs)
            score = score_model(model, X_val, y_val, scoring)
        except Exception as exc:  # noqa: BLE001 - cell failures are recorded, not fatal
            errors.append(f"{cell}: {exc}")
            continue
        if score > best_score:
            best_spec = spec
            best_score = score
    if best_spec is None:
        raise AllCellsFailed("; ".join(errors) or "no grid cells")
    return best_spec
