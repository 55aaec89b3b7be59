"""Linear models: logistic regression, linear SVC, and ordinary least squares.

Logistic regression minimizes L2-regularized mean negative log-likelihood,
the SVC an L2-regularized mean hinge loss, both by full-batch (sub)gradient
descent with a backtracking-halving step. Features are standardized
internally; stored weights live in standardized space.
"""

from __future__ import annotations

import numpy as np

from .base import (
    Matrix,
    ModelSpec,
    SingleClassTraining,
    Standardizer,
    TrainedModel,
)

MAX_ITERATIONS = 5000
GRADIENT_TOL = 1e-6  # infinity norm
_ARMIJO = 1e-4


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z), stable for large |z|
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def logistic_loss_grad(wb: np.ndarray, X: np.ndarray, y01: np.ndarray, l2: float):
    """Mean NLL + 0.5*l2*||w||^2 (bias unregularized) and its gradient."""
    w, b = wb[:-1], wb[-1]
    z = X @ w + b
    loss = float(np.mean(_softplus(z) - y01 * z) + 0.5 * l2 * np.dot(w, w))
    resid = sigmoid(z) - y01
    grad_w = X.T @ resid / X.shape[0] + l2 * w
    grad_b = float(np.mean(resid))
    return loss, np.append(grad_w, grad_b)


def hinge_loss_grad(wb: np.ndarray, X: np.ndarray, ypm: np.ndarray, C: float):
    """0.5*||w||^2/(C*n) + mean hinge and a subgradient (0 at the kink)."""
    w, b = wb[:-1], wb[-1]
    n = X.shape[0]
    margins = ypm * (X @ w + b)
    active = margins < 1.0
    loss = float(0.5 * np.dot(w, w) / (C * n) + np.mean(np.maximum(0.0, 1.0 - margins)))
    grad_w = w / (C * n) - X[active].T @ ypm[active] / n
    grad_b = float(-np.sum(ypm[active]) / n)
    return loss, np.append(grad_w, grad_b)


def minimize_descent(loss_grad, w0: np.ndarray, max_iter: int = MAX_ITERATIONS, tol: float = GRADIENT_TOL):
    """Full-batch descent with backtracking halving; returns the best iterate.

    -> (w_best, converged, iterations)
    """
    w = w0.astype(float).copy()
    loss, grad = loss_grad(w)
    best_w, best_loss = w.copy(), loss
    step = 1.0
    for iteration in range(1, max_iter + 1):
        gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
        if gnorm < tol:
            return best_w, True, iteration - 1
        g_sq = float(np.dot(grad, grad))
        s = step
        while True:
            candidate = w - s * grad
            cand_loss, cand_grad = loss_grad(candidate)
            if cand_loss <= loss - _ARMIJO * s * g_sq:
                break
            s *= 0.5
            if s < 1e-15:
                # no further progress possible along the (sub)gradient
                return best_w, False, iteration
        w, loss, grad = candidate, cand_loss, cand_grad
        if loss < best_loss:
            best_w, best_loss = w.copy(), loss
        step = min(s * 2.0, 1e6)
    return best_w, False, max_iter


class _LinearScoreModel(TrainedModel):
    """Common predict path: standardized linear score through a link."""

    kind = "classifier"

    def __init__(self, spec, columns, weights, bias, standardizer, converged):
        super().__init__(spec, columns)
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)
        self.standardizer = standardizer
        self.converged = converged
        if not converged:
            self.notes.append("non-convergence: best iterate returned")

    def decision_values(self, X: Matrix) -> np.ndarray:
        values = self.standardizer.transform(self._check_schema(X))
        return values @ self.weights + self.bias

    def predict_scores(self, X: Matrix) -> np.ndarray:
        return sigmoid(self.decision_values(X))

    def feature_importances(self) -> np.ndarray:
        return np.abs(self.weights)

    def _payload(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mean": self.standardizer.mean.tolist(),
            "std": self.standardizer.std.tolist(),
        }

    @classmethod
    def _restore(cls, spec, columns, payload, converged):
        return cls(
            spec,
            columns,
            np.array(payload["weights"], dtype=float),
            payload["bias"],
            Standardizer(np.array(payload["mean"], dtype=float), np.array(payload["std"], dtype=float)),
            converged,
        )


class LogisticRegressionModel(_LinearScoreModel):
    pass


class LinearSVCModel(_LinearScoreModel):
    """Signed margins; scores map margins through a logistic link so the
    ranking is usable for AUPRC. Label threshold 0.5 equals margin 0."""


def _check_two_classes(y: np.ndarray):
    if np.all(y) or not np.any(y):
        raise SingleClassTraining("training labels contain a single class")


def train_logistic(spec: ModelSpec, X: Matrix, y: np.ndarray) -> LogisticRegressionModel:
    y01 = np.asarray(y, dtype=float)
    _check_two_classes(np.asarray(y, dtype=bool))
    l2 = float(spec.params.get("l2", 1e-3))
    standardizer = Standardizer.fit(X.values)
    Z = standardizer.transform(X.values)
    w0 = np.zeros(Z.shape[1] + 1)
    wb, converged, _ = minimize_descent(lambda wb: logistic_loss_grad(wb, Z, y01, l2), w0)
    return LogisticRegressionModel(spec, X.columns, wb[:-1], wb[-1], standardizer, converged)


def train_linear_svc(spec: ModelSpec, X: Matrix, y: np.ndarray) -> LinearSVCModel:
    yb = np.asarray(y, dtype=bool)
    _check_two_classes(yb)
    ypm = np.where(yb, 1.0, -1.0)
    C = float(spec.params.get("C", 1.0))
    standardizer = Standardizer.fit(X.values)
    Z = standardizer.transform(X.values)
    w0 = np.zeros(Z.shape[1] + 1)
    wb, converged, _ = minimize_descent(lambda wb: hinge_loss_grad(wb, Z, ypm, C), w0)
    return LinearSVCModel(spec, X.columns, wb[:-1], wb[-1], standardizer, converged)


class LinearRegressionModel(TrainedModel):
    kind = "regressor"

    def __init__(self, spec, columns, weights, bias, standardizer, ridge_fallback=False):
        super().__init__(spec, columns)
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)
        self.standardizer = standardizer
        self.ridge_fallback = ridge_fallback
        if ridge_fallback:
            self.notes.append("singular normal equations: ridge fallback (lambda=1e-8)")

    @property
    def coefficients(self) -> np.ndarray:
        """Weights mapped back to the original (unstandardized) feature space."""
        return self.weights / self.standardizer.std

    @property
    def intercept(self) -> float:
        return self.bias - float(np.dot(self.coefficients, self.standardizer.mean))

    def predict_values(self, X: Matrix) -> np.ndarray:
        values = self.standardizer.transform(self._check_schema(X))
        return values @ self.weights + self.bias

    def feature_importances(self) -> np.ndarray:
        return np.abs(self.weights)

    def _payload(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mean": self.standardizer.mean.tolist(),
            "std": self.standardizer.std.tolist(),
            "ridge_fallback": self.ridge_fallback,
        }

    @classmethod
    def _restore(cls, spec, columns, payload, converged):
        model = cls(
            spec,
            columns,
            np.array(payload["weights"], dtype=float),
            payload["bias"],
            Standardizer(np.array(payload["mean"], dtype=float), np.array(payload["std"], dtype=float)),
            payload.get("ridge_fallback", False),
        )
        model.converged = converged
        return model


def train_linear_regression(spec: ModelSpec, X: Matrix, y: np.ndarray) -> LinearRegressionModel:
    """OLS via normal equations; falls back to ridge (lambda=1e-8) if singular."""
    t = np.asarray(y, dtype=float)
    standardizer = Standardizer.fit(X.values)
    Z = standardizer.transform(X.values)
    A = np.column_stack([Z, np.ones(Z.shape[0])])
    gram = A.T @ A
    rhs = A.T @ t
    ridge_fallback = False
    try:
        # reject numerically singular systems that solve() lets through
        if np.linalg.cond(gram) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned normal equations")
        wb = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        ridge_fallback = True
        reg = 1e-8 * np.eye(gram.shape[0])
        reg[-1, -1] = 0.0  # intercept stays unregularized
        wb = np.linalg.solve(gram + reg, rhs)
    return LinearRegressionModel(spec, X.columns, wb[:-1], wb[-1], standardizer, ridge_fallback)
