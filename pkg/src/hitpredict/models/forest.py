import math

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..errors import ParameterError, SchemaError
from ..rng import substream

LEAF = -1


def gini(labels):
    """Gini impurity 1 - sum_c p_c^2 of a 0/1 label multiset."""
    labels = np.asarray(labels, dtype=np.float64)
    if len(labels) == 0:
        return 0.0
    p = labels.mean()
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split(x, y, min_leaf):
    """Best threshold on one feature by weighted child Gini.

    Returns ``(score, threshold)`` or ``None`` if no admissible split exists.
    """
    order = np.argsort(x, kind="stable")
    sx, sy = x[order], y[order]
    n = len(sx)
    left_n = np.arange(1, n)
    left_ones = np.cumsum(sy)[:-1]
    right_n = n - left_n
    right_ones = sy.sum() - left_ones
    valid = (sx[1:] > sx[:-1]) & (left_n >= min_leaf) & (right_n >= min_leaf)
    if not valid.any():
        return None
    pl = left_ones / left_n
    pr = right_ones / right_n
    score = (left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)) / n
    score = np.where(valid, score, np.inf)
    i = int(np.argmin(score))
    lo, hi = sx[i], sx[i + 1]
    threshold = 0.5 * (lo + hi)
    if not lo <= threshold < hi:
        threshold = lo
    return float(score[i]), float(threshold)


class Tree:
    """Array-backed binary classification tree; leaves hold class-1 fractions.

    A query goes left at a node iff ``x[feature] <= threshold``.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def node_count(self):
        return len(self.feature)

    @classmethod
    def grow(cls, X, y, rng, max_features, max_depth=None, min_leaf=1):
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(float(y[rows].mean()))
            return len(feature) - 1

        stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
        n_features = X.shape[1]
        while stack:
            node, rows, depth = stack.pop()
            ys = y[rows]
            if value[node] in (0.0, 1.0) or len(rows) < 2 * min_leaf:
                continue
            if max_depth is not None and depth >= max_depth:
                continue
            best = None
            examined = 0
            for f in rng.permutation(n_features):
                if examined >= max_features:
                    break
                xs = X[rows, f]
                if xs.min() == xs.max():
                    continue
                examined += 1
                found = _best_split(xs, ys, min_leaf)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], int(f), found[1])
            if best is None:
                continue
            _, f, thr = best
            go_left = X[rows, f] <= thr
            feature[node] = f
            threshold[node] = thr
            l_rows, r_rows = rows[go_left], rows[~go_left]
            left[node] = new_node(l_rows)
            right[node] = new_node(r_rows)
            stack.append((right[node], r_rows, depth + 1))
            stack.append((left[node], l_rows, depth + 1))
        return cls(feature, threshold, left, right, value)

    def apply(self, X):
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while len(active):
            n = node[active]
            goes_left = X[active, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(goes_left, self.left[n], self.right[n])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_value(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def resolve_max_features(max_features, n_features):
    if max_features is None:
        return n_features
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if isinstance(max_features, (int, np.integer)) and 1 <= max_features:
        return min(int(max_features), n_features)
    raise ParameterError(f"invalid max_features {max_features!r}")


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bagged Gini trees averaged into a class-1 probability.

    Tree ``b`` draws its bootstrap sample and split-feature subsets from a
    stream derived from ``(random_state, b)``, so the fitted forest does not
    depend on ``n_jobs``.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", max_depth=None,
                 min_samples_leaf=1, bootstrap=True, random_state=0, n_jobs=1):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _grow_one(self, X, y, b, m):
        rng = substream(self.random_state, "forest", b)
        rows = rng.integers(0, len(X), len(X)) if self.bootstrap else np.arange(len(X))
        return Tree.grow(X[rows], y[rows], rng, m, self.max_depth, self.min_samples_leaf)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if self.n_estimators < 1:
            raise ParameterError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.min_samples_leaf < 1:
            raise ParameterError("min_samples_leaf must be >= 1")
        y = y.astype(np.float64)
        m = resolve_max_features(self.max_features, X.shape[1])
        self.trees_ = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self._grow_one)(X, y, b, m) for b in range(self.n_estimators))
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def tree_outputs(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(f"model has {self.n_features_in_} features, query has {X.shape[1]}")
        return np.array([t.predict_value(X) for t in self.trees_])

    def predict_proba(self, X):
        p1 = self.tree_outputs(X).mean(axis=0)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)

    def to_dict(self):
        return {"n_features": self.n_features_in_, "trees": [t.to_dict() for t in self.trees_]}

    def load_dict(self, d):
        self.trees_ = [Tree.from_dict(t) for t in d["trees"]]
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = int(d["n_features"])
        return self


def train_forest(train, B=100, features_per_split="sqrt", max_depth=None, min_leaf=1,
                 seed=0, n_jobs=1):
    return RandomForest(B, features_per_split, max_depth, min_leaf, True, seed, n_jobs).fit(
        train.values, train.y)


def predict_forest(model, query):
    p1 = float(model.predict_proba(np.atleast_2d(query))[0, 1])
    return int(p1 > 0.5), p1
