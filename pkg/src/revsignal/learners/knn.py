"""k-nearest-neighbor regression on standardized features."""

from __future__ import annotations

import numpy as np

from .base import Matrix, ModelSpec, Standardizer, TrainedModel

_CHUNK = 512


class KNNRegressorModel(TrainedModel):
    kind = "regressor"

    def __init__(self, spec: ModelSpec, columns, train_values: np.ndarray, targets: np.ndarray, standardizer: Standardizer):
        super().__init__(spec, columns)
        self.train_values = np.asarray(train_values, dtype=float)  # standardized
        self.targets = np.asarray(targets, dtype=float)
        self.standardizer = standardizer
        self.k = min(int(spec.params.get("k", 5)), self.targets.size)

    def predict_values(self, X: Matrix) -> np.ndarray:
        queries = self.standardizer.transform(self._check_schema(X))
        train_sq = np.sum(self.train_values**2, axis=1)
        out = np.empty(queries.shape[0])
        for start in range(0, queries.shape[0], _CHUNK):
            chunk = queries[start : start + _CHUNK]
            d2 = np.sum(chunk**2, axis=1)[:, None] + train_sq[None, :] - 2.0 * (chunk @ self.train_values.T)
            # stable sort keeps distance ties deterministic (first by train index)
            nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            out[start : start + _CHUNK] = self.targets[nearest].mean(axis=1)
        return out

    def _payload(self) -> dict:
        return {
            "train_values": self.train_values.tolist(),
            "targets": self.targets.tolist(),
            "mean": self.standardizer.mean.tolist(),
            "std": self.standardizer.std.tolist(),
        }

    @classmethod
    def _restore(cls, spec, columns, payload, converged):
        model = cls(
            spec,
            columns,
            np.array(payload["train_values"], dtype=float),
            np.array(payload["targets"], dtype=float),
            Standardizer(np.array(payload["mean"], dtype=float), np.array(payload["std"], dtype=float)),
        )
        model.converged = converged
        return model


def train_knn(spec: ModelSpec, X: Matrix, y: np.ndarray) -> KNNRegressorModel:
    if X.n_rows == 0:
        raise ValueError("empty training set")
    standardizer = Standardizer.fit(X.values)
    return KNNRegressorModel(spec, X.columns, standardizer.transform(X.values), y, standardizer)
