"""Random forest regression: bootstrap rows, per-node feature subsampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trees import Tree, fit_tree


@dataclass
class RandomForest:
    trees: list[Tree]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def tree_predictions(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([t.predict(X) for t in self.trees], axis=1)


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_estimators: int = 100,
    max_depth: int = 10,
    max_features_frac: float = 1 / 3,
    min_samples_leaf: int = 5,
    rng: np.random.Generator | None = None,
) -> RandomForest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    d, n = X.shape
    max_features = max(1, int(round(max_features_frac * n)))
    trees: list[Tree] = []
    for _ in range(n_estimators):
        tree_rng = np.random.default_rng(rng.integers(0, 2**63 - 1))
        rows = tree_rng.integers(0, d, size=d)
        tree = fit_tree(
            X[rows],
            -y[rows],
            np.ones(d),
            max_depth=max_depth,
            min_samples_leaf=min_samples_leaf,
            max_features=max_features if max_features < n else None,
            rng=tree_rng,
        )
        trees.append(tree)
    return RandomForest(trees=trees)
