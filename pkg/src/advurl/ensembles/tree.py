"""CART trees stored as flat node arrays.

Two split criteria share one vectorized search: weighted Gini for
classification trees, and the second-order gain
``0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma`` for boosting
regression trees. With unit hessians and ``lam = 0`` the latter is plain
squared-error reduction.

Candidate splits are ranked by score; near-equal scores (within 1e-12
relative) are broken by lowest slot index, then lowest threshold. Rows with
``x <= threshold`` go left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooFewRows

LEAF = -1
_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray    # int64, LEAF for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray       # int64, LEAF for leaves
    right: np.ndarray
    value: np.ndarray      # (n_nodes, n_out): class fractions or a single leaf weight
    max_depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        d = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                d[self.left[i]] = d[self.right[i]] = d[i] + 1
        return int(d.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        for _ in range(self.max_depth + 1):
            f = self.feature[node]
            internal = f != LEAF
            if not internal.any():
                break
            go_left = X[rows, np.maximum(f, 0)] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_json(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "max_depth": self.max_depth}

    @classmethod
    def from_json(cls, doc: dict) -> "DecisionTree":
        return cls(np.array(doc["feature"], dtype=np.int64), np.array(doc["threshold"], dtype=np.float64),
                   np.array(doc["left"], dtype=np.int64), np.array(doc["right"], dtype=np.int64),
                   np.array(doc["value"], dtype=np.float64).reshape(len(doc["feature"]), -1),
                   int(doc["max_depth"]))


def _thresholds(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    mid = lo + (hi - lo) / 2.0
    # adjacent floats: the midpoint may round up onto ``hi``
    return np.where(mid < hi, mid, lo)


def _pick(score: np.ndarray, valid: np.ndarray, thr: np.ndarray, feats: np.ndarray, maximize: bool):
    """Best (feature, threshold, score) under the documented tie-break, or None."""
    if not valid.any():
        return None
    s = np.where(valid, score, -np.inf if maximize else np.inf)
    best = s.max() if maximize else s.min()
    tol = _TIE_RTOL * max(1.0, abs(best))
    near = valid & ((s >= best - tol) if maximize else (s <= best + tol))
    pos, col = np.nonzero(near)
    slot = feats[col]
    t = thr[pos, col]
    k = np.lexsort((t, slot))[0]
    return int(slot[k]), float(t[k]), float(s[pos[k], col[k]])


def _sorted_view(X, idx, feats):
    Xc = X[np.ix_(idx, feats)]
    order = np.argsort(Xc, axis=0, kind="stable")
    xs = np.take_along_axis(Xc, order, axis=0)
    return order, xs


def best_gini_split(X, y, w, idx, feats, min_leaf):
    order, xs = _sorted_view(X, idx, feats)
    ws = w[idx][order]
    w1 = (w[idx] * y[idx])[order]
    n = len(idx)
    WL = np.cumsum(ws, axis=0)[:-1]
    L1 = np.cumsum(w1, axis=0)[:-1]
    W, W1 = WL[-1] + ws[-1], L1[-1] + w1[-1]
    WR, R1 = W - WL, W1 - L1
    with np.errstate(divide="ignore", invalid="ignore"):
        imp = (WL - (L1 ** 2 + (WL - L1) ** 2) / WL) + (WR - (R1 ** 2 + (WR - R1) ** 2) / WR)
    count = np.arange(1, n)[:, None]
    valid = (xs[1:] > xs[:-1]) & (count >= min_leaf) & (n - count >= min_leaf) & (WL > 0) & (WR > 0)
    Wt, W1t = float(W[0]), float(W1[0])
    parent = Wt - (W1t ** 2 + (Wt - W1t) ** 2) / Wt
    valid &= imp < parent - _TIE_RTOL * max(1.0, parent)
    return _pick(imp, valid, _thresholds(xs[:-1], xs[1:]), feats, maximize=False)


def best_newton_split(X, g, h, idx, feats, min_leaf, lam, gamma, min_child_weight):
    order, xs = _sorted_view(X, idx, feats)
    gs = g[idx][order]
    hs = h[idx][order]
    n = len(idx)
    GL = np.cumsum(gs, axis=0)[:-1]
    HL = np.cumsum(hs, axis=0)[:-1]
    G, H = GL[-1] + gs[-1], HL[-1] + hs[-1]
    GR, HR = G - GL, H - HL
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (GL ** 2 / (HL + lam) + GR ** 2 / (HR + lam) - G ** 2 / (H + lam)) - gamma
    count = np.arange(1, n)[:, None]
    valid = ((xs[1:] > xs[:-1]) & (count >= min_leaf) & (n - count >= min_leaf)
             & (HL >= min_child_weight) & (HR >= min_child_weight) & np.isfinite(gain))
    scale = float(G[0] ** 2 / (H[0] + lam)) if H[0] + lam > 0 else 1.0
    valid &= gain > _TIE_RTOL * max(1.0, scale)
    return _pick(gain, valid, _thresholds(xs[:-1], xs[1:]), feats, maximize=True)


class _Builder:
    def __init__(self, max_depth):
        self.max_depth = max_depth
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def node(self, value) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        return len(self.feature) - 1

    def finish(self) -> DecisionTree:
        return DecisionTree(np.array(self.feature, dtype=np.int64), np.array(self.threshold, dtype=np.float64),
                            np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                            np.array(self.value, dtype=np.float64), self.max_depth)


def _feature_sampler(n_features, max_features, rng):
    all_feats = np.arange(n_features)
    if max_features is None or max_features >= n_features:
        return lambda: all_feats
    return lambda: np.sort(rng.choice(n_features, size=max_features, replace=False))


def _check(X, n_targets):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise TooFewRows("a tree needs at least two rows")
    if len(X) != n_targets:
        raise ValueError("X and targets differ in length")
    return X


def train_cart(X, y, max_depth: int = 10, min_leaf: int = 1, max_features: int | None = None,
               sample_weight=None, rng: np.random.Generator | None = None) -> DecisionTree:
    """Gini classification tree on labels {0,1}; leaves hold weighted class fractions.

    ``max_features`` slots are drawn per split from ``rng`` (all slots when None).
    Identical rows or a pure node give a leaf.
    """
    y = np.asarray(y, dtype=np.float64)
    X = _check(X, len(y))
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if (w < 0).any() or w.sum() <= 0:
        raise ValueError("sample weights must be >= 0 and not all zero")
    sampler = _feature_sampler(X.shape[1], max_features, rng or np.random.default_rng(0))
    b = _Builder(max_depth)

    def leaf_value(idx):
        tot = w[idx].sum()
        p1 = float((w[idx] * y[idx]).sum() / tot) if tot > 0 else 0.5
        return [1.0 - p1, p1]

    def grow(idx, depth):
        me = b.node(leaf_value(idx))
        p1 = b.value[me][1]
        if depth >= max_depth or len(idx) < 2 * min_leaf or p1 in (0.0, 1.0):
            return me
        split = best_gini_split(X, y, w, idx, sampler(), min_leaf)
        if split is None:
            return me
        f, t, _ = split
        mask = X[idx, f] <= t
        b.feature[me], b.threshold[me] = f, t
        b.left[me] = grow(idx[mask], depth + 1)
        b.right[me] = grow(idx[~mask], depth + 1)
        return me

    grow(np.flatnonzero(w > 0), 0)
    return b.finish()


def train_regression_tree(X, g, h, max_depth: int = 3, min_leaf: int = 1, lam: float = 0.0,
                          gamma: float = 0.0, min_child_weight: float = 0.0) -> DecisionTree:
    """Second-order regression tree; each leaf weight is ``-G/(H+lam)``."""
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    X = _check(X, len(g))
    feats = np.arange(X.shape[1])
    b = _Builder(max_depth)

    def grow(idx, depth):
        G, H = g[idx].sum(), h[idx].sum()
        me = b.node([-G / (H + lam) if H + lam > 0 else 0.0])
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return me
        split = best_newton_split(X, g, h, idx, feats, min_leaf, lam, gamma, min_child_weight)
        if split is None:
            return me
        f, t, _ = split
        mask = X[idx, f] <= t
        b.feature[me], b.threshold[me] = f, t
        b.left[me] = grow(idx[mask], depth + 1)
        b.right[me] = grow(idx[~mask], depth + 1)
        return me

    grow(np.arange(len(g)), 0)
    return b.finish()


@dataclass(frozen=True, eq=False)
class TreeStack:
    """Padded arrays for evaluating many trees at once."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int

    @classmethod
    def of(cls, trees: list[DecisionTree]) -> "TreeStack":
        T = len(trees)
        M = max((t.n_nodes for t in trees), default=1)
        k = trees[0].value.shape[1] if trees else 1
        feat = np.full((T, M), LEAF, dtype=np.int64)
        thr = np.zeros((T, M))
        left = np.zeros((T, M), dtype=np.int64)
        right = np.zeros((T, M), dtype=np.int64)
        val = np.zeros((T, M, k))
        for i, t in enumerate(trees):
            n = t.n_nodes
            feat[i, :n], thr[i, :n], val[i, :n] = t.feature, t.threshold, t.value
            left[i, :n], right[i, :n] = np.maximum(t.left, 0), np.maximum(t.right, 0)
        depth = max((t.max_depth for t in trees), default=0)
        return cls(feat, thr, left, right, val, depth)

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        """(n_trees, n_rows, n_out) leaf values."""
        T = self.feature.shape[0]
        n = len(X)
        node = np.zeros((T, n), dtype=np.int64)
        tix = np.arange(T)[:, None]
        rows = np.arange(n)[None, :]
        for _ in range(self.max_depth + 1):
            f = self.feature[tix, node]
            internal = f != LEAF
            if not internal.any():
                break
            go_left = X[rows, np.maximum(f, 0)] <= self.threshold[tix, node]
            nxt = np.where(go_left, self.left[tix, node], self.right[tix, node])
            node = np.where(internal, nxt, node)
        return self.value[tix, node]
