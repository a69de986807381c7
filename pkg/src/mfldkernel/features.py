"""Neuron activation h(x; w) = tanh(u.x + b) with w = (u, b)."""

from __future__ import annotations

import enum

import numpy as np

from .errors import DimensionError, NonFiniteError


class FeatureModel(enum.Enum):
    TANH_AFFINE = "tanh_affine"

    def param_dim(self, d: int) -> int:
        """Particle dimension d' for inputs in R^d."""
        return d + 1


def _check_pair(x, w):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 1 or w.ndim != 1 or w.shape[0] != x.shape[0] + 1:
        raise DimensionError(f"expected x in R^d and w in R^(d+1), got {x.shape} and {w.shape}")
    return x, w


def sech2(z):
    """1 - tanh(z)^2 without cancellation or overflow for large |z|."""
    e = np.exp(-2.0 * np.abs(z))
    return 4.0 * e / (1.0 + e) ** 2


def feature_value(model: FeatureModel, x, w) -> float:
    x, w = _check_pair(x, w)
    return float(np.tanh(x @ w[:-1] + w[-1]))


def feature_grad(model: FeatureModel, x, w) -> np.ndarray:
    """Gradient of h(x; w) in w: (s x, s) with s = sech^2(u.x + b)."""
    x, w = _check_pair(x, w)
    s = sech2(x @ w[:-1] + w[-1])
    return s * np.append(x, 1.0)


def preactivations(X, W) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if X.ndim != 2 or W.ndim != 2 or W.shape[1] != X.shape[1] + 1:
        raise DimensionError(f"X must be n x d and W must be N x (d+1), got {X.shape} and {W.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(W))):
        raise NonFiniteError("non-finite entries in X or W")
    return X @ W[:, :-1].T + W[:, -1]


def feature_matrix(model: FeatureModel, X, W) -> np.ndarray:
    """H[i, j] = h(x_i; w_j), shape (n, N)."""
    return np.tanh(preactivations(X, W))


def feature_matrix_and_slopes(model: FeatureModel, X, W):
    """Return (H, S) where S[i, j] = sech^2 of the pre-activation.

    The gradient of h(x_i; w_j) in w_j is S[i, j] * (x_i, 1), so S together
    with X is a compact encoding of every per-particle Jacobian.
    """
    Z = preactivations(X, W)
    return np.tanh(Z), sech2(Z)


def augment(X) -> np.ndarray:
    """Append a column of ones so that Jacobians read S[i, j] * X_aug[i]."""
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def particle_jacobian(model: FeatureModel, X, w) -> np.ndarray:
    """grads[i] = grad_w h(x_i; w), shape (n, d')."""
    X = np.asarray(X, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    s = sech2(preactivations(X, w[None, :])[:, 0])
    return s[:, None] * augment(X)
