"""CART decision tree and bootstrap-aggregated random forest."""

from __future__ import annotations

import math

import numpy as np

from ..utils import make_rng
from .base import BaseModel, check_training_data, merge_hyperparameters, require_positive


def _leaf(y_subset: np.ndarray) -> dict:
    attack = int(y_subset.sum())
    legit = len(y_subset) - attack
    # majority label; an exact tie prefers legit to avoid false positives
    return {"leaf": 1 if attack > legit else 0}


def _best_split(X, y, idx, feature_ids):
    """Minimum weighted Gini split over the given features.

    Ties keep the first candidate encountered, so scanning features in
    ascending order with ascending midpoint thresholds yields the
    lowest-feature-then-lowest-threshold rule."""
    n = len(idx)
    total1 = int(y[idx].sum())
    best = None  # (score, feature, threshold)
    for f in feature_ids:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ys = y[idx][order]
        cut = np.flatnonzero(vs[1:] != vs[:-1])  # split after these positions
        if len(cut) == 0:
            continue
        nl = cut + 1.0
        n1l = np.cumsum(ys)[cut].astype(np.float64)
        n0l = nl - n1l
        nr = n - nl
        n1r = total1 - n1l
        n0r = nr - n1r
        score = (
            nl - (n0l * n0l + n1l * n1l) / nl + nr - (n0r * n0r + n1r * n1r) / nr
        ) / n
        k = int(np.argmin(score))  # first minimum = lowest threshold
        if best is None or score[k] < best[0]:
            thr = (vs[cut[k]] + vs[cut[k] + 1]) / 2.0
            best = (float(score[k]), int(f), thr)
    return best


def _build_tree(X, y, idx, max_depth, min_split, rng=None, m_features=None) -> dict:
    """Iterative CART construction; rng and m_features enable per-split
    feature subsampling for forests."""
    n_features = X.shape[1]
    root: dict = {}
    stack = [(root, idx, 0)]
    while stack:
        node, node_idx, depth = stack.pop()
        ys = y[node_idx]
        n1 = int(ys.sum())
        pure = n1 == 0 or n1 == len(ys)
        if (
            pure
            or len(node_idx) < min_split
            or (max_depth is not None and depth >= max_depth)
        ):
            node.update(_leaf(ys))
            continue
        if rng is not None and m_features is not None and m_features < n_features:
            feats = np.sort(rng.choice(n_features, size=m_features, replace=False))
        else:
            feats = range(n_features)
        best = _best_split(X, y, node_idx, feats)
        if best is None:
            node.update(_leaf(ys))
            continue
        _, f, thr = best
        mask = X[node_idx, f] <= thr
        node["f"] = f
        node["t"] = float(thr)
        node["l"] = {}
        node["r"] = {}
        stack.append((node["r"], node_idx[~mask], depth + 1))
        stack.append((node["l"], node_idx[mask], depth + 1))
    return root


def _predict_tree(root: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=np.int64)
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if len(idx) == 0:
            continue
        if "leaf" in node:
            out[idx] = node["leaf"]
            continue
        mask = X[idx, node["f"]] <= node["t"]
        stack.append((node["l"], idx[mask]))
        stack.append((node["r"], idx[~mask]))
    return out


def _tree_depth(node: dict) -> int:
    depth = 0
    stack = [(node, 0)]
    while stack:
        n, d = stack.pop()
        depth = max(depth, d)
        if "leaf" not in n:
            stack.append((n["l"], d + 1))
            stack.append((n["r"], d + 1))
    return depth


class DecisionTree(BaseModel):
    """CART with Gini impurity and midpoint thresholds."""

    algorithm = "dtree"
    DEFAULTS = {"max_depth": 16, "min_samples_split": 2}

    def __init__(self, schema, hyperparameters, seed):
        super().__init__(schema, hyperparameters, seed)
        self.root: dict = {"leaf": 0}

    @classmethod
    def fit(cls, X, y, schema, hyperparameters=None, seed=0):
        hp = merge_hyperparameters(cls.DEFAULTS, hyperparameters)
        require_positive(hp, "max_depth", "min_samples_split")
        X, y = check_training_data(X, y)
        model = cls(schema, hp, seed)
        depth = hp["max_depth"]
        model.root = _build_tree(
            X, y, np.arange(len(X)),
            None if depth is None else int(depth),
            int(hp["min_samples_split"]),
        )
        return model

    def depth(self) -> int:
        return _tree_depth(self.root)

    def _predict(self, X):
        return _predict_tree(self.root, X)

    def to_params(self):
        return {"tree": self.root}

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params):
        model = cls(schema, hyperparameters, seed)
        model.root = params["tree"]
        return model


class RandomForest(BaseModel):
    """Bootstrap forest of CART trees, sqrt-F features per split.

    Vote ties (an even split) resolve to legit, biasing against false
    positives."""

    algorithm = "rforest"
    DEFAULTS = {
        "n_trees": 100,
        "max_depth": 16,
        "min_samples_split": 2,
        "features_per_split": None,
    }

    def __init__(self, schema, hyperparameters, seed):
        super().__init__(schema, hyperparameters, seed)
        self.trees: list[dict] = []

    @classmethod
    def fit(cls, X, y, schema, hyperparameters=None, seed=0):
        hp = merge_hyperparameters(cls.DEFAULTS, hyperparameters)
        require_positive(hp, "n_trees", "max_depth", "min_samples_split", "features_per_split")
        X, y = check_training_data(X, y)
        model = cls(schema, hp, seed)
        n, n_features = X.shape
        m = hp["features_per_split"]
        m = max(1, round(math.sqrt(n_features))) if m is None else int(m)
        depth = hp["max_depth"]
        depth = None if depth is None else int(depth)
        for t in range(int(hp["n_trees"])):
            rng = make_rng(seed + t, "rforest")
            boot = rng.integers(0, n, size=n)
            model.trees.append(
                _build_tree(
                    X, y, np.asarray(boot),
                    depth, int(hp["min_samples_split"]),
                    rng=rng, m_features=m,
                )
            )
        return model

    def _scores(self, X):
        votes = np.zeros(len(X))
        for tree in self.trees:
            votes += _predict_tree(tree, X)
        return votes / max(1, len(self.trees))

    def _predict(self, X):
        return (self._scores(X) > 0.5).astype(np.int64)

    def to_params(self):
        return {"trees": self.trees}

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params):
        model = cls(schema, hyperparameters, seed)
        model.trees = params["trees"]
        return model
