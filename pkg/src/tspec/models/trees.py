"""Deterministic regression trees shared by the forest and boosting models.

Splits minimize the summed within-child squared error, which for {0,1}
targets is proportional to Gini impurity, so the same builder serves both
tasks (classification leaves hold the class fraction).  Ties are broken
toward the lowest feature index, then the lowest threshold; candidate
thresholds are midpoints between consecutive distinct values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MIN_GAIN = 1e-12


@dataclass(eq=False)
class Tree:
    feature: np.ndarray    # int64; -1 marks a leaf
    threshold: np.ndarray  # float64; 0.0 at leaves
    left: np.ndarray       # int64 child ids; -1 at leaves
    right: np.ndarray
    value: np.ndarray      # float64 node means (used at leaves)

    def to_dict(self) -> dict:
        return {
            "feature": [int(v) for v in self.feature],
            "threshold": [float(v) for v in self.threshold],
            "left": [int(v) for v in self.left],
            "right": [int(v) for v in self.right],
            "value": [float(v) for v in self.value],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=np.float64),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            value=np.asarray(data["value"], dtype=np.float64),
        )


def _best_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray, feats: np.ndarray):
    """Best (feature, threshold, score) for the rows in ``idx``, or None."""
    sub = X[np.ix_(idx, feats)]
    yv = y[idx]
    m = idx.size

    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = yv[order]

    left_n = np.arange(1, m, dtype=np.float64)[:, None]
    right_n = m - left_n
    left_sum = np.cumsum(ys, axis=0)[:-1]
    left_sq = np.cumsum(ys * ys, axis=0)[:-1]
    total_sum = left_sum[-1] + ys[-1]
    total_sq = left_sq[-1] + ys[-1] * ys[-1]

    sse = (left_sq - left_sum**2 / left_n) + (
        (total_sq - left_sq) - (total_sum - left_sum) ** 2 / right_n
    )
    sse[xs[1:] == xs[:-1]] = np.inf  # no boundary between equal values

    per_feature_best = sse.min(axis=0)
    col = int(np.argmin(per_feature_best))  # first minimum: lowest feature index
    best = per_feature_best[col]
    if not np.isfinite(best):
        return None
    row = int(np.argmin(sse[:, col]))  # first minimum: lowest threshold
    threshold = 0.5 * (xs[row, col] + xs[row + 1, col])
    return int(feats[col]), float(threshold), float(best)


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    min_samples_split: int = 2,
) -> Tree:
    """Grow a depth-limited tree on (X, y).

    ``max_features`` < D enables per-node feature subsampling (drawn from
    ``rng``, so tree construction is a pure function of its generator state).
    Nodes are numbered in depth-first, left-child-first order.
    """
    n, width = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        yv = y[idx]
        mean = float(yv.mean())
        value.append(mean)

        parent_sse = float(((yv - mean) ** 2).sum())
        if depth >= max_depth or idx.size < min_samples_split or parent_sse <= _MIN_GAIN:
            return node

        if max_features is not None and max_features < width:
            feats = np.sort(rng.choice(width, size=max_features, replace=False))
        else:
            feats = np.arange(width)
        found = _best_split(X, y, idx, feats)
        if found is None:
            return node
        feat, thr, child_sse = found
        if child_sse >= parent_sse - _MIN_GAIN:
            return node

        mask = X[idx, feat] <= thr
        feature[node] = feat
        threshold[node] = thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(n), 0)
    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )


def tree_apply(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Leaf node id for every row of X."""
    n = X.shape[0]
    out = np.zeros(n, dtype=np.int64)
    stack = [(0, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if tree.feature[node] == -1:
            out[idx] = node
            continue
        mask = X[idx, tree.feature[node]] <= tree.threshold[node]
        stack.append((int(tree.left[node]), idx[mask]))
        stack.append((int(tree.right[node]), idx[~mask]))
    return out


def tree_predict(tree: Tree, X: np.ndarray) -> np.ndarray:
    return tree.value[tree_apply(tree, X)]
