"""Learning algorithms implemented from first principles.

Families: logistic_regression, linear_svc, random_forest_clf (classification)
and knn_reg, linear_reg, random_forest_reg (regression).
"""

from __future__ import annotations

import numpy as np

from .base import (
    AllCellsFailed,
    CLASSIFIER_FAMILIES,
    Matrix,
    ModelSpec,
    REGRESSOR_FAMILIES,
    SchemaMismatch,
    SingleClassTraining,
    TrainedModel,
    labels_from_examples,
    load_model,
    matrix_from_examples,
    save_model,
)
from .forest import RandomForestModel, train_forest
from .grid import DEFAULT_GRIDS, default_grid, grid_search, score_model
from .knn import KNNRegressorModel, train_knn
from .linear import (
    LinearRegressionModel,
    LinearSVCModel,
    LogisticRegressionModel,
    train_linear_regression,
    train_linear_svc,
    train_logistic,
)

__all__ = [
    "AllCellsFailed",
    "CLASSIFIER_FAMILIES",
    "DEFAULT_GRIDS",
    "KNNRegressorModel",
    "LinearRegressionModel",
    "LinearSVCModel",
    "LogisticRegressionModel",
    "Matrix",
    "ModelSpec",
    "RandomForestModel",
    "REGRESSOR_FAMILIES",
    "SchemaMismatch",
    "SingleClassTraining",
    "TrainedModel",
    "default_grid",
    "grid_search",
    "labels_from_examples",
    "load_model",
    "matrix_from_examples",
    "model_from_dict",
    "save_model",
    "score_model",
    "train",
]

_MODEL_CLASSES = {
    "logistic_regression": LogisticRegressionModel,
    "linear_svc": LinearSVCModel,
    "linear_reg": LinearRegressionModel,
    "knn_reg": KNNRegressorModel,
    "random_forest_clf": RandomForestModel,
    "random_forest_reg": RandomForestModel,
}


def train(spec: ModelSpec, X: Matrix, y: np.ndarray, n_jobs: int = 1) -> TrainedModel:
    if X.n_rows == 0:
        raise ValueError("empty training set")
    if X.n_rows != len(y):
        raise ValueError(f"{X.n_rows} rows but {len(y)} labels")
    if spec.family == "logistic_regression":
        return train_logistic(spec, X, y)
    if spec.family == "linear_svc":
        return train_linear_svc(spec, X, y)
    if spec.family == "random_forest_clf":
        return train_forest(spec, X, y, classification=True, n_jobs=n_jobs)
    if spec.family == "random_forest_reg":
        return train_forest(spec, X, y, classification=False, n_jobs=n_jobs)
    if spec.family == "knn_reg":
        return train_knn(spec, X, y)
    if spec.family == "linear_reg":
        return train_linear_regression(spec, X, y)
    raise ValueError(f"unknown model family {spec.family!r}")


def model_from_dict(obj: dict) -> TrainedModel:
    if obj.get("format") != "revsignal-model/1":
        raise ValueError(f"unsupported model format {obj.get('format')!r}")
    spec = ModelSpec.make(obj["family"], obj["hyperparameters"], seed=obj.get("seed", 0))
    cls = _MODEL_CLASSES[spec.family]
    model = cls._restore(spec, tuple(obj["columns"]), obj["payload"], obj.get("converged", True))
    model.notes = list(obj.get("notes", []))
    return model
