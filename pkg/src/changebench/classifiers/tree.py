"""CART-style decision tree with Gini splits, plus the random forest used by
the nonlinear ensemble. Splits search every midpoint between consecutive
distinct sorted values; ties keep the earliest feature and smallest threshold,
so a fitted tree is fully deterministic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import FeatureScaler, TrainedModel, validate_training_data


@dataclass
class _Node:
    prediction: float  # mean label of the node (class-1 fraction)
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int,
                feature_ids: np.ndarray) -> tuple[float, int, float]:
    """Lowest weighted Gini over all (feature, midpoint) candidates."""
    n = y.size
    best = (np.inf, -1, 0.0)
    for f in feature_ids:
        xs = X[:, f]
        order = np.argsort(xs, kind="mergesort")
        xs_sorted = xs[order]
        ones = np.cumsum(y[order])
        total_ones = ones[-1]
        # split after position i (1-based left size), valid where values change
        left_sizes = np.arange(1, n)
        boundary = xs_sorted[1:] != xs_sorted[:-1]
        valid = boundary & (left_sizes >= min_leaf) & ((n - left_sizes) >= min_leaf)
        if not valid.any():
            continue
        left_ones = ones[:-1]
        right_ones = total_ones - left_ones
        right_sizes = n - left_sizes
        with np.errstate(invalid="ignore"):
            p_left = left_ones / left_sizes
            p_right = right_ones / right_sizes
        gini = (left_sizes * 2.0 * p_left * (1.0 - p_left)
                + right_sizes * 2.0 * p_right * (1.0 - p_right)) / n
        gini = np.where(valid, gini, np.inf)
        idx = int(np.argmin(gini))
        if gini[idx] < best[0] - 1e-15:
            thr = 0.5 * (xs_sorted[idx] + xs_sorted[idx + 1])
            best = (float(gini[idx]), int(f), thr)
    return best


class DecisionTree:
    """Binary CART classifier on raw feature values."""

    def __init__(self, max_depth: int = 10, min_leaf: int = 2,
                 max_features: int | None = None, rng: np.random.Generator | None = None):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.rng = rng
        self.root: _Node | None = None
        self.n_features = 0

    def fit(self, X, y) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.n_features = X.shape[1]
        self.root = self._build(X, y, depth=0)
        return self

    def _build(self, X, y, depth) -> _Node:
        node = _Node(prediction=float(y.mean()))
        n = y.size
        if depth >= self.max_depth or n < 2 * self.min_leaf or y.min() == y.max():
            return node
        if self.max_features is not None and self.max_features < self.n_features:
            feature_ids = np.sort(
                self.rng.choice(self.n_features, self.max_features, replace=False)
            )
        else:
            feature_ids = np.arange(self.n_features)
        gini, feature, threshold = _best_split(X, y, self.min_leaf, feature_ids)
        if feature < 0:
            return node
        mask = X[:, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = self._build(X[mask], y[mask], depth + 1)
        node.right = self._build(X[~mask], y[~mask], depth + 1)
        return node

    def predict_mean(self, X) -> np.ndarray:
        """Per-row leaf mean (class-1 fraction)."""
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        self._fill(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _fill(self, node, X, idx, out) -> None:
        if idx.size == 0:
            return
        if node.is_leaf:
            out[idx] = node.prediction
            return
        mask = X[idx, node.feature] <= node.threshold
        self._fill(node.left, X, idx[mask], out)
        self._fill(node.right, X, idx[~mask], out)


class RandomForest:
    """Bagged trees with per-tree feature subsampling; majority score."""

    def __init__(self, n_trees: int = 50, max_features: int | None = None,
                 max_depth: int = 10, min_leaf: int = 2, seed: int = 0):
        self.n_trees = n_trees
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed
        self.trees: list[DecisionTree] = []

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        rng = np.random.default_rng(self.seed)
        n = X.shape[0]
        self.trees = []
        for _ in range(self.n_trees):
            rows = rng.integers(0, n, n)
            tree = DecisionTree(self.max_depth, self.min_leaf,
                                max_features=self.max_features, rng=rng)
            tree.fit(X[rows], y[rows])
            self.trees.append(tree)
        return self

    def predict_mean(self, X) -> np.ndarray:
        """Fraction of trees voting class 1 (tree vote = leaf mean >= 0.5)."""
        votes = np.stack([t.predict_mean(X) >= 0.5 for t in self.trees])
        return votes.mean(axis=0)


class DecisionTreeModel(TrainedModel):
    def __init__(self, scaler, n_features, tree: DecisionTree, flags=()):
        super().__init__("DT", scaler, n_features, flags=flags)
        self.tree = tree

    def _score(self, Xs):
        return self.tree.predict_mean(Xs)

    def _state_json(self):
        def walk(node):
            if node.is_leaf:
                return {"leaf": node.prediction}
            return {"feature": node.feature, "threshold": node.threshold,
                    "left": walk(node.left), "right": walk(node.right)}
        return {"tree": walk(self.tree.root)}


def fit_decision_tree(X, y, max_depth: int = 10, min_leaf: int = 2) -> TrainedModel:
    # pure-label input is allowed: the tree degenerates to a single leaf
    X, y = validate_training_data(X, y, require_both_classes=False)
    scaler = FeatureScaler.fit(X)
    tree = DecisionTree(max_depth=max_depth, min_leaf=min_leaf).fit(scaler.transform(X), y)
    return DecisionTreeModel(scaler, X.shape[1], tree)


def gini_impurity(labels) -> float:
    """Gini impurity of a label multiset (binary)."""
    labels = np.asarray(labels, dtype=float)
    if labels.size == 0:
        return 0.0
    p = labels.mean()
    return 2.0 * p * (1.0 - p)
