"""Bagged CART forests for classification (Gini) and regression (variance).

Trees are grown greedily with midpoint thresholds between consecutive sorted
unique values and per-split feature subsampling (sqrt(d) for classification,
d/3 for regression). Tree i draws its randomness from seed + i, so forests
are bit-identical regardless of how many worker threads grow them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .base import Matrix, ModelSpec, SingleClassTraining, TrainedModel

_LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray  # int, _LEAF at leaves
    threshold: np.ndarray  # float; go left when value <= threshold
    left: np.ndarray  # int child ids
    right: np.ndarray
    value: np.ndarray  # leaf payload: class vote (0/1) or mean target
    importances: np.ndarray  # impurity decrease per feature, root-weighted

    def predict(self, values: np.ndarray) -> np.ndarray:
        out = np.empty(values.shape[0], dtype=float)
        stack = [(0, np.arange(values.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            f = self.feature[node]
            if f == _LEAF:
                out[idx] = self.value[node]
                continue
            go_left = values[idx, f] <= self.threshold[node]
            stack.append((self.left[node], idx[go_left]))
            stack.append((self.right[node], idx[~go_left]))
        return out


def _node_impurity(y: np.ndarray, classification: bool) -> float:
    if classification:
        p = float(np.mean(y))
        return 1.0 - p * p - (1.0 - p) * (1.0 - p)
    return float(np.var(y))


def _best_split(v: np.ndarray, y: np.ndarray, classification: bool):
    """Best (cost, threshold, sorted_order, n_left) for one feature, or None.

    cost is the size-weighted child impurity; thresholds are midpoints
    between consecutive distinct sorted values.
    """
    order = np.argsort(v, kind="stable")
    sv = v[order]
    cuts = np.nonzero(sv[1:] != sv[:-1])[0]
    if cuts.size == 0:
        return None
    m = v.size
    sy = y[order]
    n_left = cuts + 1.0
    n_right = m - n_left
    if classification:
        pos = np.cumsum(sy)[cuts]
        pos_total = float(np.sum(sy))
        pl = pos / n_left
        pr = (pos_total - pos) / n_right
        cost = (n_left * (1.0 - pl * pl - (1.0 - pl) ** 2) + n_right * (1.0 - pr * pr - (1.0 - pr) ** 2)) / m
    else:
        sq = sy * sy
        cs = np.cumsum(sy)[cuts]
        cs2 = np.cumsum(sq)[cuts]
        total = float(np.sum(sy))
        total2 = float(np.sum(sq))
        sse_left = cs2 - cs * cs / n_left
        sse_right = (total2 - cs2) - (total - cs) ** 2 / n_right
        cost = (sse_left + sse_right) / m
    best = int(np.argmin(cost))
    lo = sv[cuts[best]]
    hi = sv[cuts[best] + 1]
    thr = 0.5 * (lo + hi)
    if not (lo <= thr < hi):  # degenerate float midpoint
        thr = lo
    return float(cost[best]), float(thr), order, int(cuts[best] + 1)


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    classification: bool,
    mtry: int,
    max_depth: int | None,
    min_leaf: int,
) -> Tree:
    n, d = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    importances = np.zeros(d)

    def new_node() -> int:
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(0.0)
        return len(feature) - 1

    def leaf_value(node_y: np.ndarray) -> float:
        if classification:
            return 1.0 if 2 * int(np.sum(node_y)) > node_y.size else 0.0
        return float(np.mean(node_y))

    root = new_node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        node_y = y[idx]
        impurity = _node_impurity(node_y, classification)
        if (
            idx.size < 2
            or idx.size < min_leaf
            or impurity <= 0.0
            or (max_depth is not None and depth >= max_depth)
        ):
            value[node] = leaf_value(node_y)
            continue

        candidates = rng.choice(d, size=min(mtry, d), replace=False)
        best = None
        best_feature = -1
        for f in candidates:
            split = _best_split(X[idx, f], node_y, classification)
            if split is None:
                continue
            if best is None or split[0] < best[0]:
                best = split
                best_feature = int(f)
        if best is None:
            value[node] = leaf_value(node_y)
            continue

        cost, thr, order, n_left = best
        importances[best_feature] += idx.size / n * (impurity - cost)
        left_idx = idx[order[:n_left]]
        right_idx = idx[order[n_left:]]
        feature[node] = best_feature
        threshold[node] = thr
        left_child = new_node()
        right_child = new_node()
        left[node] = left_child
        right[node] = right_child
        # push right first so the left branch (and its rng draws) goes first
        stack.append((right_child, right_idx, depth + 1))
        stack.append((left_child, left_idx, depth + 1))

    return Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=float),
        importances=importances,
    )


class RandomForestModel(TrainedModel):
    def __init__(self, spec: ModelSpec, columns, trees: list[Tree], classification: bool):
        super().__init__(spec, columns)
        self.trees = trees
        self.classification = classification
        self.kind = "classifier" if classification else "regressor"

    def _tree_mean(self, X: Matrix) -> np.ndarray:
        values = self._check_schema(X)
        total = np.zeros(values.shape[0])
        for tree in self.trees:
            total += tree.predict(values)
        return total / len(self.trees)

    def predict_scores(self, X: Matrix) -> np.ndarray:
        if not self.classification:
            raise ValueError("regression forest has no class scores")
        return self._tree_mean(X)  # fraction of positive tree votes

    def predict_values(self, X: Matrix) -> np.ndarray:
        if self.classification:
            raise ValueError("classification forest has no regression values")
        return self._tree_mean(X)

    def feature_importances(self) -> np.ndarray:
        return np.mean([t.importances for t in self.trees], axis=0)

    def _payload(self) -> dict:
        return {
            "classification": self.classification,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                    "importances": t.importances.tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def _restore(cls, spec, columns, payload, converged):
        trees = [
            Tree(
                feature=np.array(t["feature"], dtype=np.int32),
                threshold=np.array(t["threshold"], dtype=float),
                left=np.array(t["left"], dtype=np.int32),
                right=np.array(t["right"], dtype=np.int32),
                value=np.array(t["value"], dtype=float),
                importances=np.array(t["importances"], dtype=float),
            )
            for t in payload["trees"]
        ]
        model = cls(spec, columns, trees, payload["classification"])
        model.converged = converged
        return model


def train_forest(spec: ModelSpec, X: Matrix, y: np.ndarray, classification: bool, n_jobs: int = 1) -> RandomForestModel:
    params = spec.params
    n_trees = int(params.get("n_trees", 100))
    if n_trees < 1:
        raise ValueError("forest needs at least one tree")
    max_depth = params.get("max_depth")
    max_depth = None if max_depth in (None, "none", 0) else int(max_depth)
    min_leaf = int(params.get("min_leaf", 1))
    n, d = X.values.shape
    if n == 0:
        raise ValueError("empty training set")

    if classification:
        yv = np.asarray(y, dtype=float)
        if np.all(yv == yv[0]):
            raise SingleClassTraining("training labels contain a single class")
        mtry = max(1, int(round(np.sqrt(d))))
    else:
        yv = np.asarray(y, dtype=float)
        mtry = max(1, int(round(d / 3)))

    def grow(i: int) -> Tree:
        rng = np.random.Generator(np.random.PCG64(spec.seed + i))
        bootstrap = rng.integers(0, n, size=n)
        return build_tree(X.values[bootstrap], yv[bootstrap], rng, classification, mtry, max_depth, min_leaf)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, range(n_trees)))
    else:
        trees = [grow(i) for i in range(n_trees)]
    return RandomForestModel(spec, X.columns, trees, classification)
