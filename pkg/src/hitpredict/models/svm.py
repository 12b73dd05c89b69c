import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..errors import ParameterError, SchemaError, TrainingError
from .functions import rbf_matrix, sigmoid

TAU = 1e-12


def smo(K, y, C, tol, max_iter):
    """Solve the soft-margin SVM dual with second-order working-set selection.

    ``y`` is in {-1, +1}. Returns ``(alpha, bias, n_iter, converged)``; the
    stopping rule is a maximal KKT violation gap below ``tol``.
    """
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a, Q = yy' * K
    diag = np.diag(K).copy()
    pos = y > 0
    it = 0
    converged = False
    while True:
        score = -y * grad
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        m_up = score[i]
        m_low = score[low].min() if low.any() else np.inf
        if m_up - m_low < tol:
            converged = True
            break
        if it >= max_iter:
            break
        gap = m_up - score
        curvature = diag[i] + diag - 2.0 * K[i]
        curvature = np.where(curvature > 0, curvature, TAU)
        candidates = low & (gap > 0)
        gain = np.where(candidates, -(gap * gap) / curvature, np.inf)
        j = int(np.argmin(gain))

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            new_i, new_j = ai + delta, aj + delta
            if diff > 0:
                if new_j < 0:
                    new_j, new_i = 0.0, diff
            elif new_i < 0:
                new_i, new_j = 0.0, -diff
            if diff > 0:
                if new_i > C:
                    new_i, new_j = C, C - diff
            elif new_j > C:
                new_j, new_i = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            new_i, new_j = ai - delta, aj + delta
            if total > C:
                if new_i > C:
                    new_i, new_j = C, total - C
            elif new_j < 0:
                new_j, new_i = 0.0, total
            if total > C:
                if new_j > C:
                    new_j, new_i = C, total - C
            elif new_i < 0:
                new_i, new_j = 0.0, total
        alpha[i], alpha[j] = new_i, new_j
        grad += y * (y[i] * K[i] * (new_i - ai) + y[j] * K[j] * (new_j - aj))
        it += 1

    score = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(score[free].mean())
    else:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        hi = score[up].max() if up.any() else 0.0
        lo = score[low].min() if low.any() else hi
        bias = float(0.5 * (hi + lo))
    return alpha, bias, it, converged


class SMOClassifier(ClassifierMixin, BaseEstimator):
    """Binary RBF-kernel SVM trained by sequential minimal optimization.

    Parameters
    ----------
    C : float, default=10
        Box constraint on the dual coefficients.
    gamma : float or "auto", default="auto"
        RBF width ``g``; "auto" uses 1 / n_features.
    tol : float, default=1e-3
        Stop once the largest KKT violation gap is below this.
    max_iter : int or None
        Pair updates allowed; ``None`` means ``100 * n_samples``. Hitting
        the limit leaves ``converged_ = False`` and emits a ConvergenceWarning.

    ``predict_proba`` squashes the decision value through a sigmoid; it is a
    monotone score, not a calibrated probability.
    """

    def __init__(self, C=10.0, gamma="auto", tol=1e-3, max_iter=None):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def _gamma(self, n_features):
        if self.gamma == "auto":
            return 1.0 / n_features
        if float(self.gamma) <= 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        return float(self.gamma)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if self.C <= 0:
            raise ParameterError(f"C must be positive, got {self.C}")
        if len(np.unique(y)) < 2:
            raise TrainingError("SVM training needs both classes present")
        signs = np.where(y > 0, 1.0, -1.0)
        self.gamma_ = self._gamma(X.shape[1])
        K = rbf_matrix(X, X, self.gamma_)
        max_iter = 100 * len(X) if self.max_iter is None else self.max_iter
        alpha, bias, n_iter, converged = smo(K, signs, float(self.C), self.tol, max_iter)
        if not converged:
            warnings.warn(f"SMO stopped after {n_iter} updates without meeting tol={self.tol}",
                          ConvergenceWarning, stacklevel=2)
        support = np.flatnonzero(alpha > 0)
        self.alpha_ = alpha
        self.support_ = support
        self.support_vectors_ = X[support]
        self.dual_coef_ = alpha[support] * signs[support]
        self.intercept_ = bias
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(f"model has {self.n_features_in_} features, query has {X.shape[1]}")
        if len(self.dual_coef_) == 0:
            return np.full(len(X), self.intercept_)
        return rbf_matrix(X, self.support_vectors_, self.gamma_) @ self.dual_coef_ + self.intercept_

    def predict_proba(self, X):
        p1 = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(np.int64)

    def to_dict(self):
        return {
            "support_vectors": self.support_vectors_.tolist(),
            "dual_coef": self.dual_coef_.tolist(),
            "bias": self.intercept_,
            "gamma": self.gamma_,
            "n_features": self.n_features_in_,
            "converged": self.converged_,
        }

    def load_dict(self, d):
        self.n_features_in_ = int(d["n_features"])
        self.support_vectors_ = np.asarray(d["support_vectors"], dtype=np.float64).reshape(
            -1, self.n_features_in_)
        self.dual_coef_ = np.asarray(d["dual_coef"], dtype=np.float64)
        self.intercept_ = float(d["bias"])
        self.gamma_ = float(d["gamma"])
        self.converged_ = bool(d["converged"])
        self.classes_ = np.array([0, 1])
        return self


def kkt_violations(alpha, signs, decision, C, tol=1e-3):
    """Indices of training points breaking the alpha-stratified KKT conditions."""
    margin = signs * decision
    at_zero = alpha <= 0
    at_bound = alpha >= C
    free = ~at_zero & ~at_bound
    bad = (at_zero & (margin < 1 - tol)) | (free & (np.abs(margin - 1) > tol)) | (
        at_bound & (margin > 1 + tol))
    return np.flatnonzero(bad)


def train_svm(train, C=10.0, g="auto", tolerance=1e-3, max_passes=None):
    return SMOClassifier(C, g, tolerance, max_passes).fit(train.values, train.y)
