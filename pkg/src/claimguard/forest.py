"""Random forest of Gini-split trees on bootstrap samples.

Every tree draws its own generator seeded by (forest seed, tree index),
so results do not depend on training order and trees could be built in
parallel without changing the model. Split search considers midpoints
between consecutive distinct values of a random feature subset; the
best Gini impurity decrease wins, with ties broken toward the lowest
feature index and then the lowest threshold. Leaves store the positive
class frequency of the bootstrap rows they hold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .errors import InvalidHyperparameter
from .metrics import classify
from .validation import as_binary_vector, as_float_matrix, check_n_features


@dataclass
class TreeNode:
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    probability: float | None = None  # set on leaves

    @property
    def is_leaf(self) -> bool:
        return self.probability is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"probability": self.probability}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @staticmethod
    def from_dict(payload: dict) -> "TreeNode":
        if "probability" in payload:
            return TreeNode(probability=float(payload["probability"]))
        return TreeNode(
            feature=int(payload["feature"]),
            threshold=float(payload["threshold"]),
            left=TreeNode.from_dict(payload["left"]),
            right=TreeNode.from_dict(payload["right"]),
        )


def _gini(n_pos: int, n: int) -> float:
    if n == 0:
        return 0.0
    p = n_pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(
    X: np.ndarray, y: np.ndarray, feature_ids: np.ndarray, min_leaf: int
) -> tuple[float, int, float] | None:
    """Best (decrease, feature, threshold) over midpoint candidates, or
    None when no split leaves min_leaf rows on both sides with a strictly
    positive impurity decrease."""
    n = y.shape[0]
    parent = _gini(int(y.sum()), n)
    best: tuple[float, int, float] | None = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        pos_prefix = np.cumsum(ys)
        distinct = np.flatnonzero(xs[1:] != xs[:-1]) + 1  # start of each new value
        for cut in distinct:
            n_left = int(cut)
            n_right = n - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            threshold = (xs[cut - 1] + xs[cut]) / 2.0
            pos_left = int(pos_prefix[cut - 1])
            pos_right = int(pos_prefix[-1]) - pos_left
            child = (n_left * _gini(pos_left, n_left) + n_right * _gini(pos_right, n_right)) / n
            decrease = parent - child
            if decrease <= 0.0:
                continue
            if (
                best is None
                or decrease > best[0]
                or (decrease == best[0] and (f < best[1] or (f == best[1] and threshold < best[2])))
            ):
                best = (decrease, int(f), float(threshold))
    return best


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    depth: int,
    max_depth: int,
    min_leaf: int,
    features_per_split: int,
) -> TreeNode:
    n_pos = int(y.sum())
    if depth >= max_depth or n_pos == 0 or n_pos == y.shape[0] or y.shape[0] < 2 * min_leaf:
        return TreeNode(probability=n_pos / y.shape[0])
    chosen = np.sort(rng.choice(X.shape[1], size=features_per_split, replace=False))
    split = _best_split(X, y, chosen, min_leaf)
    if split is None:
        return TreeNode(probability=n_pos / y.shape[0])
    _, feature, threshold = split
    mask = X[:, feature] <= threshold
    left = _build_tree(X[mask], y[mask], rng, depth + 1, max_depth, min_leaf, features_per_split)
    right = _build_tree(X[~mask], y[~mask], rng, depth + 1, max_depth, min_leaf, features_per_split)
    return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def _tree_probability(node: TreeNode, row: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.probability


class RandomForestGini(BaseEstimator, ClassifierMixin):
    """Bagged Gini trees; forest probability is the plain mean of the
    per-tree leaf frequencies."""

    def __init__(self, n_trees: int = 100, max_depth: int = 8, min_leaf: int = 1,
                 features_per_split: int | None = None, seed: int = 0,
                 threshold: float = 0.5):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.features_per_split = features_per_split
        self.seed = seed
        self.threshold = threshold

    def _check_hyperparameters(self, n_features: int) -> int:
        if self.n_trees < 1:
            raise InvalidHyperparameter("n_trees must be >= 1")
        if self.max_depth < 0:
            raise InvalidHyperparameter("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise InvalidHyperparameter("min_leaf must be >= 1")
        m = self.features_per_split
        if m is None:
            m = max(1, int(round(np.sqrt(n_features))))
        if not 1 <= m <= n_features:
            raise InvalidHyperparameter(
                f"features_per_split must lie in [1, {n_features}], got {m}"
            )
        return m

    def fit(self, X, y, feature_names: list[str] | None = None):
        X = as_float_matrix(X)
        y = as_binary_vector(y, n_rows=X.shape[0])
        m = self._check_hyperparameters(X.shape[1])
        n = X.shape[0]
        trees: list[TreeNode] = []
        for t in range(self.n_trees):
            rng = np.random.default_rng([self.seed, t])
            bootstrap = rng.integers(0, n, size=n)
            trees.append(
                _build_tree(
                    X[bootstrap], y[bootstrap], rng, 0, self.max_depth, self.min_leaf, m
                )
            )
        self.trees_ = trees
        self.n_features_in_ = X.shape[1]
        self.features_per_split_ = m
        self.feature_names_ = list(feature_names) if feature_names else None
        return self

    def _require_fitted(self) -> None:
        if not hasattr(self, "trees_"):
            raise NotFittedError("fit must be called before scoring")

    def predict_proba(self, X) -> np.ndarray:
        """Per-row probability of the positive class, shape (n,)."""
        self._require_fitted()
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        out = np.zeros(X.shape[0], dtype=np.float64)
        for i, row in enumerate(X):
            out[i] = sum(_tree_probability(tree, row) for tree in self.trees_) / len(self.trees_)
        return out

    def predict(self, X) -> np.ndarray:
        return classify(self.predict_proba(X), self.threshold)

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "trees": [tree.to_dict() for tree in self.trees_],
            "hyperparameters": {
                "n_trees": self.n_trees,
                "max_depth": self.max_depth,
                "min_leaf": self.min_leaf,
                "features_per_split": self.features_per_split,
                "seed": self.seed,
                "threshold": self.threshold,
            },
            "n_features": self.n_features_in_,
            "feature_names": self.feature_names_,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RandomForestGini":
        hp = payload["hyperparameters"]
        model = cls(
            n_trees=hp["n_trees"],
            max_depth=hp["max_depth"],
            min_leaf=hp["min_leaf"],
            features_per_split=hp["features_per_split"],
            seed=hp["seed"],
            threshold=hp["threshold"],
        )
        model.trees_ = [TreeNode.from_dict(t) for t in payload["trees"]]
        model.n_features_in_ = int(payload["n_features"])
        model.feature_names_ = payload.get("feature_names")
        return model
