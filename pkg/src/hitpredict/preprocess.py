"""Dataset preparation: dedup/cleanup, random oversampling, min-max scaling."""

from collections import Counter
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import FEATURES, FeatureMatrix, split
from .errors import ImbalanceError, SchemaError
from .rng import substream

DUPLICATE = "duplicate id"
MISSING = "missing feature"
NO_KEY = "no key detected"


def cleanup(tracks, drop_no_key=True):
    """Drop duplicate ids (first occurrence wins) and incomplete records.

    Returns ``(kept, dropped)`` where ``dropped`` counts removals per reason.
    """
    seen = set()
    kept = []
    dropped = Counter()
    for t in tracks:
        if t.id in seen:
            dropped[DUPLICATE] += 1
            continue
        seen.add(t.id)
        if not t.complete:
            dropped[MISSING] += 1
        elif drop_no_key and t.key == -1:
            dropped[NO_KEY] += 1
        else:
            kept.append(t)
    return kept, dropped


def oversample(matrix, seed=0):
    """Duplicate random minority rows until both classes have equal counts.

    Original rows are kept in place; the copies are appended after them.
    """
    n_neg, n_pos = matrix.class_counts()
    if n_neg == 0 or n_pos == 0:
        raise ImbalanceError("oversampling needs both classes present, got "
                             f"{n_neg} non-hits and {n_pos} hits")
    if n_neg == n_pos:
        return matrix
    minority = 1.0 if n_pos < n_neg else 0.0
    pool = np.flatnonzero(matrix.labels == minority)
    rng = substream(seed, "oversample")
    extra = pool[rng.integers(0, len(pool), size=abs(n_neg - n_pos))]
    return matrix.take(np.concatenate([np.arange(len(matrix)), extra]))


class MinMaxScaler(TransformerMixin, BaseEstimator):
    """Per-column affine map onto [0, 1] learned from the fitting rows.

    Constant columns map to 0.0 and values outside the fitted range are
    clipped, so transformed output always lies in [0, 1].
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(f"scaler fitted on {self.n_features_in_} columns, got {X.shape[1]}")
        span = self.data_max_ - self.data_min_
        constant = span == 0
        out = (X - self.data_min_) / np.where(constant, 1.0, span)
        out[:, constant] = 0.0
        return np.clip(out, 0.0, 1.0)

    def to_dict(self):
        return {"min": self.data_min_.tolist(), "max": self.data_max_.tolist()}

    @classmethod
    def from_dict(cls, d):
        self = cls()
        self.data_min_ = np.asarray(d["min"], dtype=np.float64)
        self.data_max_ = np.asarray(d["max"], dtype=np.float64)
        self.n_features_in_ = len(self.data_min_)
        return self


@dataclass(frozen=True)
class ScalerModel:
    columns: tuple
    minimum: np.ndarray
    maximum: np.ndarray

    def estimator(self):
        return MinMaxScaler.from_dict({"min": self.minimum, "max": self.maximum})


def fit_scaler(matrix):
    est = MinMaxScaler().fit(matrix.values)
    return ScalerModel(matrix.feature_names, est.data_min_, est.data_max_)


def apply_scaler(model, matrix):
    matrix.require_columns(model.columns)
    return matrix.with_values(model.estimator().transform(matrix.values))


def prepare_matrix(matrix: FeatureMatrix, spec, seed):
    """Balance and split according to ``spec.mode``.

    ``paper`` oversamples the whole matrix and then splits it; ``strict``
    splits first and oversamples only the training part, so no duplicated
    row can appear on both sides.
    """
    if spec.mode == "paper":
        return split(oversample(matrix, seed), spec)
    train, validation = split(matrix, spec)
    return oversample(train, seed), validation


__all__ = [
    "FEATURES", "MinMaxScaler", "ScalerModel", "apply_scaler", "cleanup",
    "fit_scaler", "oversample", "prepare_matrix",
]
