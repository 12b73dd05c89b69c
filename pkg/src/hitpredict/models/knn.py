import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..errors import ParameterError, SchemaError
from .functions import sq_distances

METRICS = ("euclidean", "hamming")


class KNNClassifier(ClassifierMixin, BaseEstimator):
    """Brute-force k-nearest-neighbour vote.

    Neighbours are ranked by distance with ties going to the lower training
    row index; an even split of the vote goes to class 0. ``predict_proba``
    columns are the neighbour class frequencies ``[P(0), P(1)]``.
    """

    def __init__(self, k=25, metric="euclidean"):
        self.k = k
        self.metric = metric

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if self.metric not in METRICS:
            raise ParameterError(f"unknown metric {self.metric!r}; use one of {METRICS}")
        if not 1 <= self.k <= len(X):
            raise ParameterError(f"k must lie in [1, {len(X)}], got {self.k}")
        self.X_ = X
        self.y_ = y.astype(np.int64)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def _distances(self, Q):
        if self.metric == "hamming":
            return (Q[:, None, :] != self.X_[None, :, :]).sum(axis=2).astype(np.float64)
        return np.sqrt(sq_distances(Q, self.X_))

    def kneighbors(self, X, chunk=256):
        check_is_fitted(self, "X_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(f"model has {self.n_features_in_} features, query has {X.shape[1]}")
        out = []
        for start in range(0, len(X), chunk):
            d = self._distances(X[start:start + chunk])
            out.append(np.argsort(d, axis=1, kind="stable")[:, :self.k])
        return np.vstack(out) if out else np.empty((0, self.k), dtype=np.int64)

    def predict_proba(self, X):
        ones = self.y_[self.kneighbors(X)].sum(axis=1)
        return np.column_stack([(self.k - ones) / self.k, ones / self.k])

    def predict(self, X):
        ones = self.y_[self.kneighbors(X)].sum(axis=1)
        return (2 * ones > self.k).astype(np.int64)

    def to_dict(self):
        return {"X": self.X_.tolist(), "y": self.y_.tolist()}

    def load_dict(self, d):
        self.X_ = np.asarray(d["X"], dtype=np.float64)
        self.y_ = np.asarray(d["y"], dtype=np.int64)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = self.X_.shape[1]
        return self


def train_knn(train, k=25, metric="euclidean"):
    return KNNClassifier(k=k, metric=metric).fit(train.values, train.y)


def predict_knn(model, query):
    """Return ``(class, probability_of_class_0)`` for a single query vector."""
    p0, _ = model.predict_proba(np.atleast_2d(query))[0]
    return int(model.predict(np.atleast_2d(query))[0]), float(p0)
