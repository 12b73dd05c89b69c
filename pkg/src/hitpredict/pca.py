"""Standardization + principal component analysis.

The eigendecomposition is a cyclic Jacobi sweep over the (small, symmetric)
covariance matrix of the z-scored data.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import InsufficientDataError, NumericError, ParameterError, SchemaError


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Eigenvalues and eigenvectors (as columns) of a symmetric matrix.

    Sweeps all (p, q) pairs until the off-diagonal Frobenius norm drops
    below ``tol``. Output is unsorted.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off < tol:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise NumericError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def orient(components):
    """Flip each row so its largest-magnitude entry is non-negative."""
    components = np.array(components, dtype=np.float64)
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return components


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    std: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    feature_names: tuple = ()

    @property
    def k(self):
        return self.components.shape[0]

    @property
    def cumulative_variance(self):
        return np.cumsum(self.explained_variance_ratio)

    def standardize(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def project(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.mean):
            raise SchemaError(f"PCA fitted on {len(self.mean)} columns, got shape {X.shape}")
        return self.standardize(X) @ self.components.T

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, d):
        comps = np.asarray(d["components"], dtype=np.float64).reshape(-1, len(d["mean"]))
        return cls(
            np.asarray(d["mean"], dtype=np.float64),
            np.asarray(d["std"], dtype=np.float64),
            comps,
            np.asarray(d["explained_variance"], dtype=np.float64),
            np.asarray(d["explained_variance_ratio"], dtype=np.float64),
            tuple(d.get("feature_names", ())),
        )


def fit_pca_array(X, feature_names=()):
    X = check_array(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise InsufficientDataError(f"PCA needs at least 2 rows, got {n}")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    z = (X - mean) / std
    cov = z.T @ z / n
    values, vectors = jacobi_eigh(cov)
    order = np.argsort(-values, kind="stable")
    values = np.clip(values[order], 0.0, None)
    components = orient(vectors[:, order].T)
    total = values.sum()
    ratio = values / total if total > 0 else np.zeros_like(values)
    return PcaModel(mean, std, components, values, ratio, tuple(feature_names))


def fit_pca(matrix):
    """Full (k = d) PCA model of a FeatureMatrix."""
    return fit_pca_array(matrix.values, matrix.feature_names)


def n_components_for(ratios, threshold):
    if not 0.0 < threshold <= 1.0:
        raise ParameterError(f"variance threshold must lie in (0, 1], got {threshold}")
    cum = np.cumsum(ratios)
    reached = np.flatnonzero(cum >= threshold - 1e-12)
    return int(reached[0]) + 1 if len(reached) else len(ratios)


def select_components(model, variance_threshold):
    """Keep the shortest prefix of components reaching the variance threshold."""
    k = n_components_for(model.explained_variance_ratio, variance_threshold)
    return replace(
        model,
        components=model.components[:k],
        explained_variance=model.explained_variance[:k],
        explained_variance_ratio=model.explained_variance_ratio[:k],
    )


def transform(model, matrix):
    if model.feature_names and tuple(model.feature_names) != matrix.feature_names:
        raise SchemaError(
            f"PCA expects columns {list(model.feature_names)}, got {list(matrix.feature_names)}")
    return matrix.with_values(model.project(matrix.values),
                              tuple(f"PC{i + 1}" for i in range(model.k)))


class Loading(NamedTuple):
    component: int
    feature: str
    loading: float


def loading_report(model):
    """Per component, the feature with the largest absolute loading."""
    names = model.feature_names or tuple(str(i) for i in range(model.components.shape[1]))
    rows = []
    for i, comp in enumerate(model.components):
        j = int(np.argmax(np.abs(comp)))
        rows.append(Loading(i + 1, names[j], float(comp[j])))
    return rows


class StandardPCA(TransformerMixin, BaseEstimator):
    """z-score then project onto the leading principal components.

    Parameters
    ----------
    variance_threshold : float or None, default=0.98
        Keep the fewest components whose cumulative explained variance ratio
        reaches this value. ``None`` keeps every component.
    """

    def __init__(self, variance_threshold=0.98):
        self.variance_threshold = variance_threshold

    def fit(self, X, y=None):
        model = fit_pca_array(X)
        if self.variance_threshold is not None:
            model = select_components(model, self.variance_threshold)
        self.model_ = model
        self.n_features_in_ = len(model.mean)
        self.n_components_ = model.k
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.project(check_array(X, dtype=np.float64))

    def to_dict(self):
        return self.model_.to_dict()

    @classmethod
    def from_dict(cls, d, variance_threshold=None):
        self = cls(variance_threshold)
        self.model_ = PcaModel.from_dict(d)
        self.n_features_in_ = len(self.model_.mean)
        self.n_components_ = self.model_.k
        return self
