"""Regression trees and gradient boosting.

Trees use the variance-reduction criterion with exhaustive midpoint
thresholds. Columns are argsorted once per fit; every node keeps its rows
as a (p, n_node) array of row indices sorted along each feature, and
children inherit the order by stable masking, so no node re-sorts.
"""

import logging
from typing import List, Optional

import numpy as np


logger = logging.getLogger(__name__)

LEAF = -1


class _TreeBuilder:
    """Grows one tree on (x, target) restricted to a presorted row set."""

    def __init__(self, x: np.ndarray, target: np.ndarray, max_depth: int, min_samples_leaf: int):
        self.x = x
        self.target = target
        self.max_depth = max_depth
        self.min_leaf = min_samples_leaf
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def _new_node(self, value: float) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        return len(self.value) - 1

    def _best_split(self, rows: np.ndarray):
        p, n_node = rows.shape
        if n_node < 2 * self.min_leaf:
            return None
        t = self.target[rows]
        xv = self.x[rows, np.arange(p)[:, None]]
        left_sum = np.cumsum(t, axis=1)[:, :-1]
        total = left_sum[0, -1] + t[0, -1]
        left_cnt = np.arange(1, n_node)
        right_cnt = n_node - left_cnt
        gain = left_sum**2 / left_cnt + (total - left_sum) ** 2 / right_cnt
        valid = xv[:, 1:] > xv[:, :-1]
        valid &= (left_cnt >= self.min_leaf) & (right_cnt >= self.min_leaf)
        if not valid.any():
            return None
        gain = np.where(valid, gain, -np.inf)
        f, k = np.unravel_index(int(np.argmax(gain)), gain.shape)
        if gain[f, k] <= total**2 / n_node * (1.0 + 1e-12) + 1e-12:
            return None
        return int(f), 0.5 * (xv[f, k] + xv[f, k + 1])

    def grow(self, rows: np.ndarray, depth: int = 0) -> int:
        node = self._new_node(float(self.target[rows[0]].mean()))
        if depth >= self.max_depth:
            return node
        split = self._best_split(rows)
        if split is None:
            return node
        f, thr = split
        goes_left = self.x[rows, f] <= thr
        n_left = int(goes_left[0].sum())
        if n_left == 0 or n_left == rows.shape[1]:
            return node
        p = rows.shape[0]
        left_rows = rows[goes_left].reshape(p, n_left)
        right_rows = rows[~goes_left].reshape(p, rows.shape[1] - n_left)
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.grow(left_rows, depth + 1)
        self.right[node] = self.grow(right_rows, depth + 1)
        return node


def _presort(x: np.ndarray) -> np.ndarray:
    return np.argsort(x, axis=0, kind="stable")


def _rows_from_mask(order: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """(p, n_kept) row indices of the masked rows, sorted along each feature."""
    kept = int(mask.sum())
    return order.T[mask[order].T].reshape(order.shape[1], kept)


class RegressionTree:
    """CART regression tree."""

    def __init__(self, max_depth: int = 8, min_samples_leaf: int = 5):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _fit_presorted(
        self, x: np.ndarray, target: np.ndarray, order: np.ndarray, mask: Optional[np.ndarray]
    ) -> "RegressionTree":
        if mask is None:
            rows = order.T.copy()
        else:
            rows = _rows_from_mask(order, mask)
        builder = _TreeBuilder(x, target, self.max_depth, self.min_samples_leaf)
        builder.grow(rows)
        self.feature_ = np.asarray(builder.feature, dtype=int)
        self.threshold_ = np.asarray(builder.threshold, dtype=float)
        self.left_ = np.asarray(builder.left, dtype=int)
        self.right_ = np.asarray(builder.right, dtype=int)
        self.value_ = np.asarray(builder.value, dtype=float)
        return self

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "RegressionTree":
        return self._fit_presorted(x, y, _presort(x), None)

    @property
    def n_nodes(self) -> int:
        return int(self.value_.size)

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=int)
        active = np.arange(x.shape[0])
        while active.size:
            f = self.feature_[node[active]]
            internal = f != LEAF
            active = active[internal]
            if not active.size:
                break
            current = node[active]
            go_left = x[active, self.feature_[current]] <= self.threshold_[current]
            node[active] = np.where(go_left, self.left_[current], self.right_[current])
        return self.value_[node]


class GradientBoosting:
    """
    Least-squares gradient boosting of regression trees.

    Starts from the mean response and adds ``learning_rate`` times a tree fit
    to the current residuals at each round, optionally on a random subsample
    of rows (drawn without replacement).
    """

    def __init__(
        self,
        n_rounds: int = 200,
        max_depth: int = 3,
        learning_rate: float = 0.1,
        subsample: float = 1.0,
        min_samples_leaf: int = 1,
    ):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.subsample = subsample
        self.min_samples_leaf = min_samples_leaf

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "GradientBoosting":
        n = x.shape[0]
        order = _presort(x)
        self.init_ = float(y.mean())
        self.trees_: List[RegressionTree] = []
        current = np.full(n, self.init_)
        n_sub = max(2, int(round(self.subsample * n)))
        for _ in range(self.n_rounds):
            residual = y - current
            mask = None
            if n_sub < n:
                mask = np.zeros(n, dtype=bool)
                mask[rng.choice(n, size=n_sub, replace=False)] = True
            tree = RegressionTree(self.max_depth, self.min_samples_leaf)
            tree._fit_presorted(x, residual, order, mask)
            current = current + self.learning_rate * tree.predict(x)
            self.trees_.append(tree)
        logger.debug(
            f"Boosted {self.n_rounds} trees, training MSE {float(np.mean((y - current) ** 2)):.4g}"
        )
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.full(x.shape[0], self.init_)
        for tree in self.trees_:
            out += self.learning_rate * tree.predict(x)
        return out
