import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..errors import NumericError
from .functions import sigmoid


def loss_and_gradient(w, b, X, y):
    """Mean negative log-likelihood and its gradient w.r.t. (w, b)."""
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    residual = sigmoid(z) - y
    return loss, X.T @ residual / len(y), float(residual.mean())


class LogisticRegressionGD(ClassifierMixin, BaseEstimator):
    """Unregularized logistic regression fit by full-batch gradient descent.

    Starts from all-zero parameters and stops once the gradient's max-norm
    falls below ``tolerance`` or after ``max_epochs`` updates. In one
    dimension the fitted curve is the logistic with location ``-bias/w``
    and scale ``1/w``.
    """

    def __init__(self, learning_rate=0.1, max_epochs=5000, tolerance=1e-6):
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.tolerance = tolerance

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = y.astype(np.float64)
        w = np.zeros(X.shape[1])
        b = 0.0
        losses = []
        epoch = 0
        for epoch in range(self.max_epochs + 1):
            loss, gw, gb = loss_and_gradient(w, b, X, y)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            losses.append(loss)
            if max(np.max(np.abs(gw), initial=0.0), abs(gb)) < self.tolerance or epoch == self.max_epochs:
                break
            w = w - self.learning_rate * gw
            b = b - self.learning_rate * gb
        self.coef_ = w
        self.intercept_ = b
        self.n_iter_ = epoch
        self.loss_curve_ = losses
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p1 = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(np.int64)

    def to_dict(self):
        return {"weights": self.coef_.tolist(), "bias": self.intercept_}

    def load_dict(self, d):
        self.coef_ = np.asarray(d["weights"], dtype=np.float64)
        self.intercept_ = float(d["bias"])
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = len(self.coef_)
        return self


def train_logreg(train, learning_rate=0.1, max_epochs=5000, tolerance=1e-6):
    return LogisticRegressionGD(learning_rate, max_epochs, tolerance).fit(train.values, train.y)
