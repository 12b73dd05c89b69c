"""Scalar and vectorized kernel / link functions shared by the models."""

import math

import numpy as np

from ..errors import ParameterError, SchemaError


def rbf_kernel(x, y, g):
    """Gaussian RBF similarity exp(-g * ||x - y||^2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise SchemaError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if g <= 0:
        raise ParameterError(f"kernel parameter g must be positive, got {g}")
    diff = x - y
    return math.exp(-g * float(diff @ diff))


def sq_distances(A, B):
    """Pairwise squared Euclidean distances between rows of A and rows of B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    d = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d, 0.0)


def rbf_matrix(A, B, g):
    return np.exp(-g * sq_distances(A, B))


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def logistic(x, m=0.0, s=1.0):
    """Logistic curve with location ``m`` and scale ``s``."""
    if s <= 0:
        raise ParameterError(f"scale must be positive, got {s}")
    return sigmoid((np.asarray(x, dtype=np.float64) - m) / s)[()]
