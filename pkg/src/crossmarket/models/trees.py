"""Exact-split regression trees on gradient/hessian statistics.

One tree builder serves plain CART, random-forest members and the boosting
rounds: a tree fit to (g, h) with leaf value -G/(H + reg_lambda) reproduces
CART variance-reduction splits when g = -y and h = 1 (the leaf value is then
the node mean). Splits maximize

    0.5 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma

and are accepted only when the gain is positive. Candidate thresholds are
midpoints of adjacent distinct feature values. The split search is
vectorized across all candidate features of a node at once. Tie-break is
deterministic: the first feature in ascending column order wins, and within
a feature the lowest threshold; this makes fits reproducible and, for
full-feature trees, equivariant under column permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray  # int, _LEAF at leaves
    threshold: np.ndarray
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
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]

    @property
    def n_leaves(self) -> int:
        return int((self.feature == _LEAF).sum())


class _Builder:
    def __init__(
        self,
        X: np.ndarray,
        g: np.ndarray,
        h: np.ndarray,
        *,
        max_depth: int,
        reg_lambda: float,
        gamma: float,
        min_samples_leaf: int,
        max_features: int | None,
        rng: np.random.Generator | None,
    ) -> None:
        self.X = X
        self.g = g
        self.h = h
        self.max_depth = max_depth
        self.lam = reg_lambda
        self.gamma = gamma
        self.min_leaf = min_samples_leaf
        self.max_features = max_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _best_split(self, rows: np.ndarray) -> tuple[float, int, float] | None:
        n_feat = self.X.shape[1]
        if self.max_features is not None and self.max_features < n_feat:
            feats = np.sort(self.rng.choice(n_feat, size=self.max_features, replace=False))
        else:
            feats = np.arange(n_feat)
        Xn = self.X[np.ix_(rows, feats)]
        m = rows.size
        order = np.argsort(Xn, axis=0, kind="stable")
        xs = np.take_along_axis(Xn, order, axis=0)
        gn = self.g[rows]
        hn = self.h[rows]
        g_tot = float(gn.sum())
        h_tot = float(hn.sum())
        gc = np.cumsum(gn[order], axis=0)[:-1]
        hc = np.cumsum(hn[order], axis=0)[:-1]
        counts = np.arange(1, m)[:, None]
        valid = xs[:-1] < xs[1:]
        valid &= (counts >= self.min_leaf) & ((m - counts) >= self.min_leaf)
        if not valid.any():
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            score = gc**2 / (hc + self.lam) + (g_tot - gc) ** 2 / (h_tot - hc + self.lam)
        score = np.where(valid, score, -np.inf)
        # feature-major argmax: first feature wins ties, then lowest threshold
        flat = int(np.argmax(score.T))
        fpos, pos = divmod(flat, m - 1)
        parent = g_tot * g_tot / (h_tot + self.lam) if h_tot + self.lam > 0 else 0.0
        gain = 0.5 * (float(score[pos, fpos]) - parent) - self.gamma
        if gain <= 0.0:
            return None
        return gain, int(feats[fpos]), float((xs[pos, fpos] + xs[pos + 1, fpos]) / 2.0)

    def build(self, rows: np.ndarray, depth: int) -> int:
        idx = len(self.feature)
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        g_tot = float(self.g[rows].sum())
        h_tot = float(self.h[rows].sum())
        self.value.append(-g_tot / (h_tot + self.lam) if h_tot + self.lam > 0 else 0.0)
        if depth >= self.max_depth or rows.size < 2 * self.min_leaf:
            return idx
        split = self._best_split(rows)
        if split is None:
            return idx
        _, f, thr = split
        go_left = self.X[rows, f] <= thr
        self.feature[idx] = f
        self.threshold[idx] = thr
        self.left[idx] = self.build(rows[go_left], depth + 1)
        self.right[idx] = self.build(rows[~go_left], depth + 1)
        return idx


def fit_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    *,
    max_depth: int,
    reg_lambda: float = 0.0,
    gamma: float = 0.0,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    X = np.asarray(X, dtype=float)
    b = _Builder(
        X,
        np.asarray(g, dtype=float),
        np.asarray(h, dtype=float),
        max_depth=max_depth,
        reg_lambda=reg_lambda,
        gamma=gamma,
        min_samples_leaf=min_samples_leaf,
        max_features=max_features,
        rng=rng,
    )
    b.build(np.arange(X.shape[0], dtype=np.int64), 0)
    return Tree(
        feature=np.asarray(b.feature, dtype=np.int64),
        threshold=np.asarray(b.threshold, dtype=float),
        left=np.asarray(b.left, dtype=np.int64),
        right=np.asarray(b.right, dtype=np.int64),
        value=np.asarray(b.value, dtype=float),
    )


def best_split_exhaustive(X: np.ndarray, y: np.ndarray) -> tuple[int, float, float]:
    """Brute-force single best axis split by total SSE; oracle for tree splits.

    Returns (feature, threshold, sse_after). Scans every midpoint of every
    feature with plain python loops; intended for tests, not production.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    best = (0, 0.0, float(((y - y.mean()) ** 2).sum()))
    found = False
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for a, b in zip(values[:-1], values[1:]):
            thr = (a + b) / 2.0
            lmask = X[:, f] <= thr
            yl, yr = y[lmask], y[~lmask]
            sse = float(((yl - yl.mean()) ** 2).sum() + ((yr - yr.mean()) ** 2).sum())
            if not found or sse < best[2]:
                best = (f, thr, sse)
                found = True
    return best
