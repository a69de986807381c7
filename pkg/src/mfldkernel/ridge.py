"""Exact inner solve: the optimal second layer for squared loss.

For a first-layer measure with Gram matrix ``sigma`` on the training inputs
the optimal second layer is ``a_t(w) = h(X; w)^T alpha_t`` where
``alpha_t = (sigma + n * bar_lambda_a * I)^{-1} Y_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DimensionError, SolverError
from .features import FeatureModel, feature_matrix
from .particles import ParticleCloud, weighted_sigma


@dataclass(frozen=True)
class Hyperparams:
    lambda_: float
    lambda_a: float
    lambda_w: float
    eta: float
    tilde_sigma: float = 0.0

    def __post_init__(self):
        for name in ("lambda_", "lambda_a", "lambda_w", "eta", "tilde_sigma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative number, got {value}")

    def validate_strict(self):
        """Training requires lambda, lambda_a, lambda_w and eta strictly positive."""
        for name in ("lambda_", "lambda_a", "lambda_w", "eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        return self

    @property
    def bar_lambda_a(self) -> float:
        return self.lambda_ * self.lambda_a

    @property
    def bar_lambda_w(self) -> float:
        return self.lambda_ * self.lambda_w


DEFAULT_HYPERPARAMS = Hyperparams(lambda_=0.004, lambda_a=0.25, lambda_w=0.25, eta=0.2)


@dataclass
class RidgeSolution:
    """alpha (n x T) plus a reusable factorisation of M = sigma + n bar_lambda_a I.

    ``sigma`` is kept when the dense route was used; the low-rank route keeps
    the weighted feature factor instead and never forms the n x n matrix.
    """

    alpha: np.ndarray
    bar_lambda_a: float
    sigma: np.ndarray | None = None
    H: np.ndarray | None = field(default=None, repr=False)
    _chol: tuple | None = field(default=None, repr=False)
    _lowrank: tuple | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def ridge(self) -> float:
        return self.n * self.bar_lambda_a

    def solve(self, B) -> np.ndarray:
        """M^{-1} B using the retained factorisation."""
        B = np.asarray(B, dtype=np.float64)
        if self._chol is not None:
            return linalg.cho_solve(self._chol, B)
        F, cf = self._lowrank
        c = self.ridge
        return (B - F @ linalg.cho_solve(cf, F.T @ B)) / c

    def trace_inv(self) -> float:
        """tr(M^{-1})."""
        if self._chol is not None:
            L = self._chol[0]
            # M^{-1} = L^{-T} L^{-1}, so the trace is ||L^{-1}||_F^2
            Linv = linalg.solve_triangular(L, np.eye(self.n), lower=self._chol[1])
            return float(np.sum(Linv * Linv))
        F, cf = self._lowrank
        c = self.ridge
        K = F.T @ F
        return float((self.n - np.trace(linalg.cho_solve(cf, K))) / c)

    def gram_times(self, V) -> np.ndarray:
        """sigma @ V, without forming sigma on the low-rank route."""
        if self.sigma is not None:
            return self.sigma @ V
        F = self._lowrank[0]
        return F @ (F.T @ V)


def _as_targets(Y, n):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] != n:
        raise DimensionError(f"targets must have {n} rows, got shape {Y.shape}")
    return Y


def fit_second_layer(sigma, Y, bar_lambda_a: float) -> RidgeSolution:
    """Dense route: Cholesky of the n x n system."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionError(f"sigma must be square, got {sigma.shape}")
    if not bar_lambda_a > 0:
        raise ValueError("bar_lambda_a must be positive")
    n = sigma.shape[0]
    Y = _as_targets(Y, n)
    M = sigma + n * bar_lambda_a * np.eye(n)
    try:
        chol = linalg.cho_factor(M, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"Cholesky factorisation of the ridge system failed: {exc}") from exc
    alpha = linalg.cho_solve(chol, Y)
    return RidgeSolution(alpha=alpha, bar_lambda_a=bar_lambda_a, sigma=sigma, _chol=chol)


def fit_second_layer_lowrank(H, weights, Y, bar_lambda_a: float) -> RidgeSolution:
    """Woodbury route, cheaper when there are fewer particles than samples.

    With F = H diag(sqrt(weights)) we have sigma = F F^T and
    M^{-1} = (I - F (c I + F^T F)^{-1} F^T) / c for c = n * bar_lambda_a.
    """
    H = np.asarray(H, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if H.ndim != 2 or weights.shape != (H.shape[1],):
        raise DimensionError(f"H is {H.shape} but got {weights.shape} weights")
    if not bar_lambda_a > 0:
        raise ValueError("bar_lambda_a must be positive")
    n, N = H.shape
    Y = _as_targets(Y, n)
    c = n * bar_lambda_a
    F = H * np.sqrt(weights)
    try:
        cf = linalg.cho_factor(c * np.eye(N) + F.T @ F, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"Cholesky factorisation of the Woodbury core failed: {exc}") from exc
    alpha = (Y - F @ linalg.cho_solve(cf, F.T @ Y)) / c
    return RidgeSolution(alpha=alpha, bar_lambda_a=bar_lambda_a, _lowrank=(F, cf))


def fit_for_cloud(H, weights, Y, bar_lambda_a: float, solver: str = "dense") -> RidgeSolution:
    """Pick the dense or Woodbury route; ``auto`` uses Woodbury when N < n / 2."""
    n, N = np.shape(H)
    if solver == "auto":
        solver = "woodbury" if N < n / 2 else "dense"
    if solver == "dense":
        sol = fit_second_layer(weighted_sigma(H, weights), Y, bar_lambda_a)
    elif solver == "woodbury":
        sol = fit_second_layer_lowrank(H, weights, Y, bar_lambda_a)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    sol.H = np.asarray(H, dtype=np.float64)
    return sol


def second_layer_values(H, sol: RidgeSolution) -> np.ndarray:
    """A[j, t] = a_t(w_j) = H[:, j]^T alpha_t, shape (N, T)."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] != sol.n:
        raise DimensionError(f"H has {H.shape[0]} rows but the solution was fitted on {sol.n} samples")
    return H.T @ sol.alpha


def predict(model: FeatureModel, Xq, cloud: ParticleCloud, sol: RidgeSolution, H_train=None) -> np.ndarray:
    """f_t(x) = sum_j weights[j] a_t(w_j) h(x; w_j) for each query row.

    ``H_train`` defaults to the training features stored on ``sol``.
    """
    if H_train is None:
        if sol.H is None:
            raise ValueError("solution carries no training features; pass H_train")
        H_train = sol.H
    A = second_layer_values(H_train, sol)
    Hq = feature_matrix(model, Xq, cloud.W)
    return Hq @ (cloud.weights[:, None] * A)


@dataclass(frozen=True)
class Objectives:
    U: float
    G: float
    train_mse: float
    a_sq_norm: float
    w_sq_norm: float
    U_closed: float


def objectives(sol: RidgeSolution, Y, cloud: ParticleCloud, hyper: Hyperparams) -> Objectives:
    """Loss, second-layer norm, U and G at the measure the solution was fitted on."""
    Y = _as_targets(Y, sol.n)
    n, T = Y.shape
    fitted = sol.gram_times(sol.alpha)
    train_mse = float(np.sum((Y - fitted) ** 2) / (n * T))
    a_sq_norm = float(np.sum(sol.alpha * fitted) / T)
    U = 0.5 * train_mse + 0.5 * sol.bar_lambda_a * a_sq_norm
    U_closed = float(0.5 * sol.bar_lambda_a * np.sum(Y * sol.alpha) / T)
    w_sq_norm = cloud.mean_sq_norm()
    G = U + 0.5 * hyper.bar_lambda_w * w_sq_norm
    return Objectives(U=U, G=G, train_mse=train_mse, a_sq_norm=a_sq_norm, w_sq_norm=w_sq_norm, U_closed=U_closed)
