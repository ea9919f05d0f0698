"""Regression trees grown on total child SSE and a bootstrap forest of them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAF = -1


@dataclass
class RegressionTree:
    # Flat node arrays; feature == LEAF marks a leaf whose prediction is value.
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while np.any(active):
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.feature[node[idx]] != LEAF
        return self.value[node]


def best_split(X, y, min_leaf=1):
    """Lowest total child SSE over all features and midpoint thresholds.

    Returns ``(sse, feature, threshold)`` or ``None`` when nothing splits.
    Ties keep the earlier feature and the smaller threshold.
    """
    m, n = X.shape
    best = None
    for j in range(n):
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        ys = y[order]
        cs = np.cumsum(ys)
        cs2 = np.cumsum(ys * ys)
        nl = np.arange(1, m)
        sl, sl2 = cs[:-1], cs2[:-1]
        sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
        nr = m - nl
        sse = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr)
        valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not np.any(valid):
            continue
        k = np.flatnonzero(valid)[np.argmin(sse[valid])]
        if best is None or sse[k] < best[0]:
            best = (float(sse[k]), j, 0.5 * (xs[k] + xs[k + 1]))
    return best


def tree_fit(X, y, min_leaf: int = 1) -> RegressionTree:
    """Grow until nodes are pure or cannot be split into two ``min_leaf`` children."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (M, N) with M matching len(y)")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        ys = y[rows]
        # mean can round outside the observed range; clamp it back
        value.append(float(np.clip(ys.mean(), ys.min(), ys.max())))
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        return len(value) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)))]
    while stack:
        nid, rows = stack.pop()
        ys = y[rows]
        if len(rows) < 2 * min_leaf or np.all(ys == ys[0]):
            continue
        split = best_split(X[rows], ys, min_leaf)
        if split is None:
            continue
        _, j, t = split
        mask = X[rows, j] <= t
        li, ri = rows[mask], rows[~mask]
        feature[nid], threshold[nid] = j, t
        left[nid] = new_node(li)
        right[nid] = new_node(ri)
        stack.append((right[nid], ri))
        stack.append((left[nid], li))
    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
    )


@dataclass
class ForestModel:
    trees: list
    seed: int
    n_trees: int = 20
    # Spawn keys of the per-tree seed sequences, for provenance.
    tree_keys: list = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        return np.mean([t.predict(X) for t in self.trees], axis=0)


def forest_fit(X, y, n_trees: int = 20, seed: int = 0, min_leaf: int = 1) -> ForestModel:
    """Average of ``n_trees`` trees, each grown on its own bootstrap resample.

    Tree ``i`` draws from ``SeedSequence(seed).spawn(n_trees)[i]``, so a tree
    does not depend on how many others are grown alongside it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    trees, keys = [], []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, len(y), size=len(y))
        trees.append(tree_fit(X[rows], y[rows], min_leaf))
        keys.append(tuple(child.spawn_key))
    return ForestModel(trees, seed, n_trees, keys)
