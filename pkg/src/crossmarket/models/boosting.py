"""Boosted tree ensembles: second-order gradient boosting and AdaBoost.R2.

GradientBoost grows depth-limited trees on (g, h) of the squared loss
(g = pred - y, h = 1) with the gain/leaf-weight regularization
Omega(f) = gamma * n_leaves + 0.5 * reg_lambda * ||leaf weights||^2.

HistGradientBoost is the histogram/leaf-wise variant standing in for LGBM:
features are pre-binned (up to 256 bins), and the tree repeatedly splits the
leaf with the largest gain until num_leaves is reached or no split gains.
The one-sided sampling and feature-bundling speedups of the original are
deliberately out of scope.

AdaBoostR2 reweights observations by linear loss on absolute errors and
predicts with the weighted median of its stage predictions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trees import Tree, fit_tree

_LEAF = -1


@dataclass
class GradientBoost:
    trees: list[Tree]
    base: float
    learning_rate: float
    train_rss: list[float]  # training RSS after each round, base model first

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], self.base)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_gradient_boost(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_estimators: int = 100,
    max_depth: int = 6,
    learning_rate: float = 0.1,
    reg_lambda: float = 1.0,
    gamma: float = 0.0,
    min_samples_leaf: int = 1,
) -> GradientBoost:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    base = float(y.mean())
    pred = np.full(y.size, base)
    trees: list[Tree] = []
    rss = [float(((y - pred) ** 2).sum())]
    for _ in range(n_estimators):
        g = pred - y
        h = np.ones(y.size)
        tree = fit_tree(
            X,
            g,
            h,
            max_depth=max_depth,
            reg_lambda=reg_lambda,
            gamma=gamma,
            min_samples_leaf=min_samples_leaf,
        )
        pred = pred + learning_rate * tree.predict(X)
        trees.append(tree)
        rss.append(float(((y - pred) ** 2).sum()))
    return GradientBoost(trees=trees, base=base, learning_rate=learning_rate, train_rss=rss)


# --- histogram / leaf-wise variant -------------------------------------------


def bin_features(X: np.ndarray, max_bins: int = 256) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quantile-based binning into a fixed (features x max_bins-1) edge table.

    Returns (codes, edges, n_cuts): codes[i, f] is the bin of X[i, f], edges
    is padded with +inf beyond each feature's real cut count n_cuts[f].
    """
    X = np.asarray(X, dtype=float)
    n_feat = X.shape[1]
    codes = np.empty(X.shape, dtype=np.int64)
    edges = np.full((n_feat, max_bins - 1), np.inf)
    n_cuts = np.zeros(n_feat, dtype=np.int64)
    qs = np.linspace(0, 100, max_bins + 1)[1:-1]
    for f in range(n_feat):
        cuts = np.unique(np.percentile(X[:, f], qs, method="linear"))
        codes[:, f] = np.searchsorted(cuts, X[:, f], side="left")
        edges[f, : cuts.size] = cuts
        n_cuts[f] = cuts.size
    return codes, edges, n_cuts


@dataclass
class _HistTree:
    feature: np.ndarray
    cut: np.ndarray  # bin-edge value; goes left when x <= cut
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat != _LEAF
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            go_left = X[rows, feat[rows]] <= self.cut[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]


def _leaf_value(gsum: float, hsum: float, lam: float) -> float:
    return -gsum / (hsum + lam) if hsum + lam > 0 else 0.0


def _hist_best_split(
    codes: np.ndarray,
    edges: np.ndarray,
    n_cuts: np.ndarray,
    max_bins: int,
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    lam: float,
    gamma: float,
    min_leaf: int,
) -> tuple[float, int, float, np.ndarray] | None:
    n_feat = codes.shape[1]
    c = codes[rows]
    flat = (c + np.arange(n_feat)[None, :] * max_bins).ravel()
    total = n_feat * max_bins
    gh = np.bincount(flat, weights=np.repeat(g[rows], n_feat), minlength=total)
    hh = np.bincount(flat, weights=np.repeat(h[rows], n_feat), minlength=total)
    ch = np.bincount(flat, minlength=total)
    gl = np.cumsum(gh.reshape(n_feat, max_bins), axis=1)[:, :-1]
    hl = np.cumsum(hh.reshape(n_feat, max_bins), axis=1)[:, :-1]
    cl = np.cumsum(ch.reshape(n_feat, max_bins), axis=1)[:, :-1]
    g_tot = float(g[rows].sum())
    h_tot = float(h[rows].sum())
    valid = np.arange(max_bins - 1)[None, :] < n_cuts[:, None]
    valid &= (cl >= min_leaf) & ((rows.size - cl) >= min_leaf)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        score = gl**2 / (hl + lam) + (g_tot - gl) ** 2 / (h_tot - hl + lam)
    score = np.where(valid, score, -np.inf)
    pos_flat = int(np.argmax(score))  # row-major: first feature wins ties
    f, pos = divmod(pos_flat, max_bins - 1)
    parent = g_tot * g_tot / (h_tot + lam)
    gain = 0.5 * (float(score[f, pos]) - parent) - gamma
    if gain <= 0.0:
        return None
    left_rows = rows[c[:, f] <= pos]
    return gain, int(f), float(edges[f, pos]), left_rows


def _fit_hist_tree(
    codes: np.ndarray,
    edges: np.ndarray,
    n_cuts: np.ndarray,
    max_bins: int,
    g: np.ndarray,
    h: np.ndarray,
    *,
    num_leaves: int,
    reg_lambda: float,
    gamma: float,
    min_samples_leaf: int,
) -> _HistTree:
    feature = [_LEAF]
    cut = [0.0]
    left = [_LEAF]
    right = [_LEAF]
    value = [_leaf_value(float(g.sum()), float(h.sum()), reg_lambda)]
    all_rows = np.arange(g.size)
    # leaves eligible for splitting, each with its cached best split
    candidates: dict[int, tuple[float, int, float, np.ndarray, np.ndarray]] = {}
    first = _hist_best_split(
        codes, edges, n_cuts, max_bins, all_rows, g, h, reg_lambda, gamma, min_samples_leaf
    )
    if first is not None:
        gain, f, cv, lrows = first
        candidates[0] = (gain, f, cv, all_rows, lrows)
    n_leaves = 1
    while n_leaves < num_leaves and candidates:
        node = max(candidates, key=lambda k: (candidates[k][0], -k))
        gain, f, cv, rows, lrows = candidates.pop(node)
        rmask = np.ones(rows.size, dtype=bool)
        rmask[np.searchsorted(rows, lrows)] = False
        rrows = rows[rmask]
        li, ri = len(feature), len(feature) + 1
        for rows_child in (lrows, rrows):
            feature.append(_LEAF)
            cut.append(0.0)
            left.append(_LEAF)
            right.append(_LEAF)
            value.append(
                _leaf_value(float(g[rows_child].sum()), float(h[rows_child].sum()), reg_lambda)
            )
        feature[node] = f
        cut[node] = cv
        left[node] = li
        right[node] = ri
        n_leaves += 1
        for child, rows_child in ((li, lrows), (ri, rrows)):
            if rows_child.size >= 2 * min_samples_leaf:
                split = _hist_best_split(
                    codes,
                    edges,
                    n_cuts,
                    max_bins,
                    rows_child,
                    g,
                    h,
                    reg_lambda,
                    gamma,
                    min_samples_leaf,
                )
                if split is not None:
                    cgain, cf, ccv, clrows = split
                    candidates[child] = (cgain, cf, ccv, rows_child, clrows)
    return _HistTree(
        feature=np.asarray(feature, dtype=np.int64),
        cut=np.asarray(cut, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
    )


@dataclass
class HistGradientBoost:
    trees: list[_HistTree]
    base: float
    learning_rate: float
    train_rss: list[float]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], self.base)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_hist_gradient_boost(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_estimators: int = 100,
    num_leaves: int = 31,
    learning_rate: float = 0.1,
    reg_lambda: float = 0.0,
    gamma: float = 0.0,
    min_samples_leaf: int = 20,
    max_bins: int = 256,
) -> HistGradientBoost:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    codes, edges, n_cuts = bin_features(X, max_bins)
    base = float(y.mean())
    pred = np.full(y.size, base)
    trees: list[_HistTree] = []
    rss = [float(((y - pred) ** 2).sum())]
    for _ in range(n_estimators):
        g = pred - y
        h = np.ones(y.size)
        tree = _fit_hist_tree(
            codes,
            edges,
            n_cuts,
            max_bins,
            g,
            h,
            num_leaves=num_leaves,
            reg_lambda=reg_lambda,
            gamma=gamma,
            min_samples_leaf=min_samples_leaf,
        )
        pred = pred + learning_rate * tree.predict(X)
        trees.append(tree)
        rss.append(float(((y - pred) ** 2).sum()))
    return HistGradientBoost(trees=trees, base=base, learning_rate=learning_rate, train_rss=rss)


# --- AdaBoost.R2 ---------------------------------------------------------------


@dataclass
class AdaBoostR2:
    trees: list[Tree]
    log_weights: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        preds = np.stack([t.predict(X) for t in self.trees], axis=1)
        order = np.argsort(preds, axis=1)
        wsum = np.cumsum(self.log_weights[order], axis=1)
        half = 0.5 * wsum[:, -1][:, None]
        pick = np.argmax(wsum >= half, axis=1)
        return preds[np.arange(X.shape[0]), order[np.arange(X.shape[0]), pick]]


def fit_adaboost_r2(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_estimators: int = 100,
    max_depth: int = 5,
    learning_rate: float = 0.1,
    rng: np.random.Generator | None = None,
    min_samples_leaf: int = 1,
) -> AdaBoostR2:
    """Drucker's AdaBoost.R2 with linear loss and weighted-bootstrap tree fits."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    d = y.size
    weights = np.full(d, 1.0 / d)
    trees: list[Tree] = []
    log_w: list[float] = []
    for _ in range(n_estimators):
        rows = rng.choice(d, size=d, replace=True, p=weights)
        tree = fit_tree(
            X[rows],
            -y[rows],
            np.ones(d),
            max_depth=max_depth,
            min_samples_leaf=min_samples_leaf,
        )
        pred = tree.predict(X)
        abs_err = np.abs(pred - y)
        max_err = abs_err.max()
        if max_err <= 0.0:
            trees.append(tree)
            log_w.append(1.0)
            break
        loss = abs_err / max_err
        avg_loss = float(weights @ loss)
        if avg_loss >= 0.5:
            if not trees:
                trees.append(tree)
                log_w.append(1.0)
            break
        beta = avg_loss / (1.0 - avg_loss)
        trees.append(tree)
        log_w.append(learning_rate * float(np.log(1.0 / beta)))
        weights = weights * np.power(beta, learning_rate * (1.0 - loss))
        total = weights.sum()
        if total <= 0.0:
            break
        weights = weights / total
    return AdaBoostR2(trees=trees, log_weights=np.asarray(log_w, dtype=float))
