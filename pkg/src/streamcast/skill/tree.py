"""CART decision trees grown on dense float matrices.

Splits send ``x[feature] <= threshold`` left. Classification trees minimise
weighted Gini impurity, regression trees the weighted variance. Nodes are
stored in flat arrays so a fitted tree serializes to plain lists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_classes) class fractions, or (n_nodes, 1) mean
    n_samples: np.ndarray
    impurity: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def n_leaves(self):
        return int(np.sum(self.feature == LEAF))

    def apply(self, X):
        """Leaf index reached by each row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return node

    def predict_value(self, X):
        return self.value[self.apply(X)]

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
            "impurity": self.impurity.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=float),
            n_samples=np.asarray(d["n_samples"], dtype=np.int64),
            impurity=np.asarray(d["impurity"], dtype=float),
        )


def _gini(counts, n):
    return 1.0 - np.sum((counts / n) ** 2)


def _best_split_classification(xs, ys_onehot, min_leaf):
    """Best split position on one sorted feature: (score, i) maximising sum(c^2)/n on both sides."""
    n = len(xs)
    left = np.cumsum(ys_onehot, axis=0)[:-1]
    total = left[-1] + ys_onehot[-1]
    right = total - left
    n_left = np.arange(1, n)
    n_right = n - n_left
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    score = np.sum(left**2, axis=1) / n_left + np.sum(right**2, axis=1) / n_right
    score = np.where(valid, score, -np.inf)
    i = int(np.argmax(score))
    return score[i], i


def _best_split_regression(xs, ys, min_leaf):
    n = len(xs)
    left = np.cumsum(ys)[:-1]
    total = left[-1] + ys[-1]
    right = total - left
    n_left = np.arange(1, n)
    n_right = n - n_left
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    score = left**2 / n_left + right**2 / n_right
    score = np.where(valid, score, -np.inf)
    i = int(np.argmax(score))
    return score[i], i


def grow_tree(X, y, n_classes=None, max_features=None, max_depth=None, min_samples_leaf=1,
              rng=None, importances=None) -> Tree:
    """Grow one tree depth-first.

    ``n_classes`` selects classification (``y`` holds class indices); with
    ``None`` the tree is a regressor. Per node, features are visited in
    random order until ``max_features`` non-constant ones have been
    scored. Weighted impurity decreases are added to ``importances``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    rng = np.random.default_rng() if rng is None else rng
    max_features = p if max_features is None else max(1, min(p, int(max_features)))
    classify = n_classes is not None
    if classify:
        targets = np.eye(n_classes)[np.asarray(y, dtype=np.int64)]
    else:
        targets = np.asarray(y, dtype=float)

    feature, threshold, left, right, value, n_samples, impurity = [], [], [], [], [], [], []

    def node_stats(idx):
        if classify:
            counts = targets[idx].sum(axis=0)
            return counts / len(idx), _gini(counts, len(idx))
        t = targets[idx]
        return np.array([t.mean()]), float(t.var())

    def add_node(idx):
        val, imp = node_stats(idx)
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        value.append(val)
        n_samples.append(len(idx))
        impurity.append(imp)
        return len(feature) - 1

    root = add_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        m = len(idx)
        if impurity[node] <= 1e-12 or m < 2 * min_samples_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        best = None
        examined = 0
        for f in rng.permutation(p):
            if examined >= max_features:
                break
            col = X[idx, f]
            if col.min() == col.max():
                continue
            examined += 1
            order = np.argsort(col, kind="stable")
            xs = col[order]
            ys = targets[idx[order]]
            found = (
                _best_split_classification(xs, ys, min_samples_leaf)
                if classify
                else _best_split_regression(xs, ys, min_samples_leaf)
            )
            if found is None:
                continue
            score, i = found
            if best is None or score > best[0]:
                thr = 0.5 * (xs[i] + xs[i + 1])
                if not xs[i] <= thr < xs[i + 1]:
                    thr = xs[i]
                best = (score, f, thr)
        if best is None:
            continue
        _, f, thr = best
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        l_node, r_node = add_node(li), add_node(ri)
        feature[node], threshold[node] = int(f), float(thr)
        left[node], right[node] = l_node, r_node
        if importances is not None:
            decrease = m * impurity[node] - len(li) * impurity[l_node] - len(ri) * impurity[r_node]
            importances[f] += max(decrease, 0.0)
        stack.append((r_node, ri, depth + 1))
        stack.append((l_node, li, depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.vstack(value),
        n_samples=np.asarray(n_samples, dtype=np.int64),
        impurity=np.asarray(impurity, dtype=float),
    )
