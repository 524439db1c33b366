"""Array-backed binary decision trees with exact (sorted, midpoint) split search.

Nodes are stored in parallel arrays in depth-first order, so every child has
a larger index than its parent. Rows with ``x[feature] <= threshold`` go left.
Two growers share the layout: a Gini classification tree (leaf value =
P(class 1)) and a second-order regression tree for boosting (leaf value =
``-G / (H + lambda)``).

Equal-gain ties go to the lowest feature index, then the lowest threshold.
"""
from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class DecisionTree:
    feature: np.ndarray  # int64, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # P(class 1) for classification, additive margin for regression
    max_depth_reached: int = 0

    @property
    def n_nodes(self):
        return self.feature.size

    @property
    def nbytes(self):
        return sum(a.nbytes for a in (self.feature, self.threshold, self.left, self.right,
                                      self.value))

    def apply(self, x):
        """Leaf index reached by each row of ``x``."""
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            n = node[active]
            go_left = x[active, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_value(self, x):
        return self.value[self.apply(x)]

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "max_depth_reached": self.max_depth_reached}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["feature"], dtype=np.int64),
                   np.array(d["threshold"], dtype=np.float64),
                   np.array(d["left"], dtype=np.int64),
                   np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=np.float64),
                   int(d["max_depth_reached"]))


def gini(n_pos, n):
    """Gini impurity of a node holding ``n_pos`` positives out of ``n`` rows."""
    if n == 0:
        return 0.0
    p = n_pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _midpoint(lo, hi):
    mid = 0.5 * (lo + hi)
    return lo if mid >= hi else mid


def _sorted_columns(x, rows, features):
    """Per-feature sort of the node's rows: (feature ids, sorted values, sort order, valid cuts)."""
    features = np.asarray(features, dtype=np.int64)
    cols = x[np.ix_(rows, features)]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    valid = xs[:-1] < xs[1:]
    return features, xs, order, valid


_TIE_TOL = 1e-12


def _pick(features, xs, valid, score):
    """Best cut by ``score`` (higher wins); earliest feature, then earliest cut, on ties.

    Scores within a relative 1e-12 of the best count as ties, so equal gains
    that differ only by rounding do not decide the split.
    """
    score = np.where(valid, score, -np.inf)
    top = score.max()
    if not np.isfinite(top):
        return None, -np.inf
    near = score >= top - _TIE_TOL * max(1.0, abs(top))
    j = int(np.argmax(near.any(axis=0)))
    k = int(np.argmax(near[:, j]))
    return (int(features[j]), _midpoint(xs[k, j], xs[k + 1, j])), score[k, j]


def _best_gini_split(x, y, rows, features):
    """(feature, threshold) minimising the weighted child Gini, or None."""
    n = rows.size
    features, xs, order, valid = _sorted_columns(x, rows, features)
    cum = np.cumsum(y[rows][order], axis=0)
    pos, total = cum[:-1], cum[-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    p_left = pos / n_left
    p_right = (total - pos) / n_right
    # n * weighted Gini = n_L * 2 p_L (1 - p_L) + n_R * 2 p_R (1 - p_R)
    score = n_left * 2.0 * p_left * (1.0 - p_left) + n_right * 2.0 * p_right * (1.0 - p_right)
    best, _ = _pick(features, xs, valid, -score)
    return best


def _best_newton_split(x, g, h, order, lam):
    """(feature, threshold) maximising the second-order gain, or None when no gain is positive.

    ``order`` is the node's (m, n_features) matrix of row ids sorted per feature.
    """
    features = np.arange(x.shape[1])
    xs = x[order, features]
    valid = xs[:-1] < xs[1:]
    gs, hs = g[order], h[order]
    G, H = gs[:, 0].sum(), hs[:, 0].sum()
    gl = np.cumsum(gs, axis=0)[:-1]
    hl = np.cumsum(hs, axis=0)[:-1]
    gr, hr = G - gl, H - hl
    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - G * G / (H + lam))
    best, best_gain = _pick(features, xs, valid, gain)
    return best if best_gain > 0.0 else None


def _partition_order(order, goes_left):
    """Split a per-feature sorted row matrix into the left/right children, keeping sort order."""
    m = goes_left[order]
    n_left = int(m[:, 0].sum())
    left = order.T[m.T].reshape(order.shape[1], n_left).T
    right = order.T[~m.T].reshape(order.shape[1], order.shape[0] - n_left).T
    return left, right


class _Builder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self.depth_reached = 0

    def node(self):
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finish(self):
        return DecisionTree(np.array(self.feature, dtype=np.int64),
                            np.array(self.threshold, dtype=np.float64),
                            np.array(self.left, dtype=np.int64),
                            np.array(self.right, dtype=np.int64),
                            np.array(self.value, dtype=np.float64),
                            self.depth_reached)


def grow_classification_tree(x, y, max_depth, features_per_split=None, rng=None):
    """Greedy Gini tree on rows of ``x`` with 0/1 targets ``y``.

    When ``features_per_split`` is below the feature count, each node
    searches a fresh random subset of that size drawn from ``rng``.
    """
    n_features = x.shape[1]
    k = n_features if features_per_split is None else int(features_per_split)
    if not 1 <= k <= n_features:
        raise ValueError(f"features_per_split must be in [1, {n_features}], got {k}")
    y = np.asarray(y, dtype=np.float64)
    b = _Builder()
    stack = [(np.arange(x.shape[0]), 0, b.node())]
    while stack:
        rows, depth, idx = stack.pop()
        b.depth_reached = max(b.depth_reached, depth)
        n_pos = y[rows].sum()
        b.value[idx] = n_pos / rows.size
        if depth >= max_depth or n_pos == 0 or n_pos == rows.size:
            continue
        if k < n_features:
            features = np.sort(rng.choice(n_features, size=k, replace=False))
        else:
            features = range(n_features)
        found = _best_gini_split(x, y, rows, features)
        if found is None:
            continue
        f, t = found
        mask = x[rows, f] <= t
        b.feature[idx], b.threshold[idx] = f, t
        b.left[idx] = b.node()
        b.right[idx] = b.node()
        # right pushed first so the left subtree is expanded (and numbered) first
        stack.append((rows[~mask], depth + 1, b.right[idx]))
        stack.append((rows[mask], depth + 1, b.left[idx]))
    return b.finish()


def presort(x):
    """Stable per-feature argsort of all rows; reusable across boosting rounds."""
    return np.argsort(x, axis=0, kind="stable")


def grow_newton_tree(x, g, h, max_depth, lam, sorted_rows=None):
    """Regression tree on gradient/hessian pairs; leaves hold ``-sum(g) / (sum(h) + lam)``."""
    if sorted_rows is None:
        sorted_rows = presort(x)
    b = _Builder()
    goes_left = np.zeros(x.shape[0], dtype=bool)
    stack = [(sorted_rows, 0, b.node())]
    while stack:
        order, depth, idx = stack.pop()
        rows = order[:, 0]
        b.depth_reached = max(b.depth_reached, depth)
        b.value[idx] = -g[rows].sum() / (h[rows].sum() + lam)
        if depth >= max_depth or rows.size < 2:
            continue
        found = _best_newton_split(x, g, h, order, lam)
        if found is None:
            continue
        f, t = found
        goes_left[rows] = x[rows, f] <= t
        left, right = _partition_order(order, goes_left)
        b.feature[idx], b.threshold[idx] = f, t
        b.left[idx] = b.node()
        b.right[idx] = b.node()
        stack.append((right, depth + 1, b.right[idx]))
        stack.append((left, depth + 1, b.left[idx]))
    return b.finish()
