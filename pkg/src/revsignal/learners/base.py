"""Shared learner plumbing: matrices, model specs, and the model interface."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

MODEL_FORMAT = "revsignal-model/1"

CLASSIFIER_FAMILIES = ("logistic_regression", "linear_svc", "random_forest_clf")
REGRESSOR_FAMILIES = ("knn_reg", "linear_reg", "random_forest_reg")

_ALLOWED_HYPERPARAMETERS: dict[str, frozenset[str]] = {
    "logistic_regression": frozenset({"l2"}),
    "linear_svc": frozenset({"C"}),
    "random_forest_clf": frozenset({"n_trees", "max_depth", "min_leaf"}),
    "random_forest_reg": frozenset({"n_trees", "max_depth", "min_leaf"}),
    "knn_reg": frozenset({"k"}),
    "linear_reg": frozenset(),
}


class SchemaMismatch(ValueError):
    pass


class SingleClassTraining(ValueError):
    pass


class AllCellsFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: tuple[tuple[str, object], ...] = ()
    seed: int = 0

    def __post_init__(self):
        allowed = _ALLOWED_HYPERPARAMETERS.get(self.family)
        if allowed is None:
            raise ValueError(f"unknown model family {self.family!r}")
        hp = tuple(sorted(dict(self.hyperparameters).items()))
        object.__setattr__(self, "hyperparameters", hp)
        unknown = {k for k, _ in hp} - set(allowed)
        if unknown:
            raise ValueError(f"hyperparameters {sorted(unknown)} not valid for {self.family}")

    @classmethod
    def make(cls, family: str, hyperparameters: Mapping[str, object] | None = None, seed: int = 0) -> "ModelSpec":
        return cls(family=family, hyperparameters=tuple((hyperparameters or {}).items()), seed=seed)

    @property
    def params(self) -> dict[str, object]:
        return dict(self.hyperparameters)

    def is_classifier(self) -> bool:
        return self.family in CLASSIFIER_FAMILIES


@dataclass
class Matrix:
    """Rectangular, finite feature matrix with its column names."""

    values: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.columns = tuple(self.columns)
        if self.values.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {self.values.shape}")
        if self.values.shape[1] != len(self.columns):
            raise ValueError(f"{self.values.shape[1]} columns but {len(self.columns)} names")
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise ValueError("matrix entries must be finite")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def select(self, columns: Sequence[str]) -> "Matrix":
        pos = {c: i for i, c in enumerate(self.columns)}
        idx = [pos[c] for c in columns]
        return Matrix(self.values[:, idx], tuple(columns))


def matrix_from_examples(examples, columns: Sequence[str]) -> Matrix:
    """Feature matrix over the selected fields of each example's vector."""
    rows = np.empty((len(examples), len(columns)), dtype=float)
    for i, ex in enumerate(examples):
        for j, name in enumerate(columns):
            rows[i, j] = getattr(ex.features, name)
    return Matrix(rows, tuple(columns))


def labels_from_examples(examples, task: str) -> np.ndarray:
    if task == "participation":
        return np.array([ex.participated for ex in examples], dtype=bool)
    if task == "feedback":
        return np.array([ex.log_feedback for ex in examples], dtype=float)
    raise ValueError(f"unknown task {task!r}")


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "Standardizer":
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        std = np.where(std > 0, std, 1.0)  # constant columns pass through
        return cls(mean=mean, std=std)

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std


class TrainedModel:
    """Base interface; prediction validates the feature-column schema."""

    kind = "classifier"  # or "regressor"

    def __init__(self, spec: ModelSpec, columns: tuple[str, ...]):
        self.spec = spec
        self.columns = tuple(columns)
        self.converged = True
        self.notes: list[str] = []

    def _check_schema(self, X: Matrix) -> np.ndarray:
        if tuple(X.columns) != self.columns:
            raise SchemaMismatch(f"model expects columns {self.columns}, got {tuple(X.columns)}")
        return X.values

    # -- interface ----------------------------------------------------------

    def predict_scores(self, X: Matrix) -> np.ndarray:
        raise NotImplementedError

    def predict_labels(self, X: Matrix, threshold: float = 0.5) -> np.ndarray:
        return self.predict_scores(X) >= threshold

    def predict_values(self, X: Matrix) -> np.ndarray:
        raise NotImplementedError

    def feature_importances(self) -> np.ndarray:
        """Per-column importance used by recursive feature elimination."""
        raise NotImplementedError(f"{self.spec.family} exposes no feature importances")

    # -- persistence ----------------------------------------------------------

    def _payload(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "family": self.spec.family,
            "hyperparameters": self.spec.params,
            "seed": self.spec.seed,
            "columns": list(self.columns),
            "converged": self.converged,
            "notes": self.notes,
            "payload": self._payload(),
        }


def save_model(model: TrainedModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh)


def load_model(path: str | Path) -> TrainedModel:
    from . import model_from_dict  # dispatch lives in the package root

    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return model_from_dict(obj)
