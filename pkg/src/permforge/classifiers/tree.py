"""CART trees on weighted Gini impurity and the bagged random forest."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..serialize import register
from .base import DecisionTreeConfig, RandomForestConfig, TrainedModel, config_from_dict

NODE_COLUMNS = ("index", "feature", "threshold", "left", "right", "leaf_fraction", "weight", "impurity")


@dataclass(frozen=True, eq=False)
class TreeArrays:
    """Flat preorder node table; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # weighted malware fraction of the node
    weight: np.ndarray
    impurity: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        return kernels.tree_apply(self.feature, self.threshold, self.left, self.right, X)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def impurity_decrease(self, width: int) -> np.ndarray:
        out = np.zeros(width)
        for i in np.flatnonzero(self.feature >= 0):
            l, r = self.left[i], self.right[i]
            gain = (self.weight[i] * self.impurity[i] - self.weight[l] * self.impurity[l]
                    - self.weight[r] * self.impurity[r])
            out[self.feature[i]] += gain
        return out

    def to_table(self) -> np.ndarray:
        idx = np.arange(self.n_nodes, dtype=np.float64)
        return np.column_stack([idx, self.feature, self.threshold, self.left, self.right,
                                self.value, self.weight, self.impurity]).astype(np.float64)

    @classmethod
    def from_table(cls, table: np.ndarray) -> "TreeArrays":
        t = np.asarray(table, dtype=np.float64).reshape(-1, len(NODE_COLUMNS))
        as_int = lambda c: t[:, c].astype(np.int64)
        return cls(as_int(1), t[:, 2].copy(), as_int(3), as_int(4), t[:, 5].copy(), t[:, 6].copy(), t[:, 7].copy())


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    rows: np.ndarray,
    rng: np.random.Generator | None,
    max_features: int,
    min_leaf: int,
    max_depth: int | None = None,
) -> TreeArrays:
    """Grow a tree on ``rows`` (duplicates allowed, as in a bootstrap sample).

    Nodes split while impure and while both children can keep ``min_leaf``
    rows; there is no minimum gain. Features are drawn in a fresh random
    order at each node when ``max_features`` is below the width.
    """
    width = X.shape[1]
    feature, threshold, left, right, value, weight, impurity = [], [], [], [], [], [], []
    stack = [(np.asarray(rows, dtype=np.int64), 0, -1, False)]
    all_feats = np.arange(width, dtype=np.int64)
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        wn = w[idx]
        tot = wn.sum()
        pos = wn[y[idx] == 1].sum()
        p1 = pos / tot if tot > 0 else 0.0
        imp = 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(p1)
        weight.append(tot)
        impurity.append(imp)
        if imp <= 0.0 or len(idx) < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            continue
        order = rng.permutation(width).astype(np.int64) if max_features < width else all_feats
        f, t, _ = kernels.best_split(X, y, w, idx, order, max_features, min_leaf)
        if f < 0:
            continue
        feature[node] = f
        threshold[node] = t
        go_left = X[idx, f] <= t
        stack.append((idx[~go_left], depth + 1, node, False))
        stack.append((idx[go_left], depth + 1, node, True))
    return TreeArrays(
        np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64), np.array(value), np.array(weight), np.array(impurity),
    )


@register("decision_tree")
@dataclass(eq=False)
class DecisionTreeModel(TrainedModel):
    tree: TreeArrays = None

    def _scores(self, X):
        return self.tree.scores(X)

    def export_state(self):
        return self._base_meta(), {"nodes": self.tree.to_table()}

    @classmethod
    def import_state(cls, meta, arrays):
        return cls(config_from_dict(meta["config"]), meta["feature_width"], meta["train_seed"],
                   tree=TreeArrays.from_table(arrays["nodes"]))


@register("random_forest")
@dataclass(eq=False)
class RandomForestModel(TrainedModel):
    trees: list[TreeArrays] = field(default_factory=list)

    def _scores(self, X):
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.scores(X)
        return total / len(self.trees)

    def feature_importance(self) -> np.ndarray:
        acc = np.zeros(self.feature_width)
        for tree in self.trees:
            dec = tree.impurity_decrease(self.feature_width)
            s = dec.sum()
            if s > 0:
                acc += dec / s
        total = acc.sum()
        return acc / total if total > 0 else acc

    def export_state(self):
        arrays = {f"tree{i}": t.to_table() for i, t in enumerate(self.trees)}
        meta = self._base_meta()
        meta["n_trees"] = len(self.trees)
        return meta, arrays

    @classmethod
    def import_state(cls, meta, arrays):
        trees = [TreeArrays.from_table(arrays[f"tree{i}"]) for i in range(meta["n_trees"])]
        return cls(config_from_dict(meta["config"]), meta["feature_width"], meta["train_seed"],
                   oob_score=meta.get("oob_score"), trees=trees)


def fit_tree(cfg: DecisionTreeConfig, X, y, seed: int) -> DecisionTreeModel:
    w = np.ones(len(y))
    tree = build_tree(X, y, w, np.arange(len(y)), None, X.shape[1], cfg.min_samples_leaf, cfg.max_depth)
    return DecisionTreeModel(cfg, X.shape[1], seed, tree=tree)


def fit_forest(cfg: RandomForestConfig, X, y, seed: int) -> RandomForestModel:
    n, width = X.shape
    w = np.ones(n)
    mtry = cfg.mtry(width)
    oob_sum = np.zeros(n)
    oob_cnt = np.zeros(n)
    trees = []
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(seed + t)
        rows = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        tree = build_tree(X, y, w, rows, rng, mtry, cfg.min_samples_leaf, cfg.max_depth)
        trees.append(tree)
        if cfg.oob:
            out = np.ones(n, dtype=bool)
            out[rows] = False
            if out.any():
                oob_sum[out] += tree.scores(X[out])
                oob_cnt[out] += 1
    oob = None
    if cfg.oob:
        seen = oob_cnt > 0
        if seen.any():
            pred = (oob_sum[seen] / oob_cnt[seen] >= 0.5).astype(np.int64)
            oob = float(np.mean(pred == y[seen]))
    return RandomForestModel(cfg, width, seed, oob_score=oob, trees=trees)
