"""Discretised mean-field Langevin dynamics for the first layer.

The second layer is re-solved exactly at every step, then every particle
moves along minus the w-gradient of the first variation of G evaluated at
the frozen measure, plus Gaussian noise of scale sqrt(2 eta lambda).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import DimensionError, DivergenceError
from .features import FeatureModel, augment, feature_matrix_and_slopes
from .particles import ParticleCloud
from .ridge import Hyperparams, Objectives, RidgeSolution, fit_for_cloud, objectives

DIVERGENCE_FACTOR = 1e6


def first_variation(a_at_w, w, hyper: Hyperparams) -> float:
    """lambda * (-(lambda_a / 2T) ||a(w)||^2 + (lambda_w / 2) ||w||^2)."""
    a_at_w = np.atleast_1d(np.asarray(a_at_w, dtype=np.float64))
    w = np.asarray(w, dtype=np.float64)
    T = a_at_w.shape[0]
    return float(hyper.lambda_ * (-0.5 * hyper.lambda_a / T * (a_at_w @ a_at_w) + 0.5 * hyper.lambda_w * (w @ w)))


def grad_first_variation(j: int, H, grads_j, sol: RidgeSolution, w_j, hyper: Hyperparams) -> np.ndarray:
    """Gradient in w of the first variation at particle j, alpha held fixed.

    ``grads_j[i]`` is grad_w h(x_i; w_j).  Reference path for a single
    particle; training uses the vectorised :func:`particle_drift`.
    """
    H = np.asarray(H, dtype=np.float64)
    grads_j = np.asarray(grads_j, dtype=np.float64)
    w_j = np.asarray(w_j, dtype=np.float64)
    if grads_j.shape != (H.shape[0], w_j.shape[0]):
        raise DimensionError(f"grads_j must be n x d', got {grads_j.shape}")
    alpha = sol.alpha
    T = alpha.shape[1]
    a = H[:, j] @ alpha
    da = grads_j.T @ alpha
    return hyper.lambda_ * (-(hyper.lambda_a / T) * (da @ a) + hyper.lambda_w * w_j)


def particle_drift(X_aug, H, S, alpha, W, hyper: Hyperparams, beta=None) -> np.ndarray:
    """Drift for all particles at once, shape (N, d').

    The Jacobian of h(x_i; w_j) is S[i, j] * X_aug[i], so
    J_j^T v = X_aug^T (S[:, j] * v).  With ``beta`` (label-noise solve) the
    envelope term of the noise labels is subtracted.
    """
    T = alpha.shape[1]
    acc = np.zeros_like(W)
    for t in range(T):
        a_t = H.T @ alpha[:, t]
        term = a_t[:, None] * ((S * alpha[:, t][:, None]).T @ X_aug)
        if beta is not None:
            e_t = H.T @ beta[:, t]
            term = term - e_t[:, None] * ((S * beta[:, t][:, None]).T @ X_aug)
        acc += term
    return hyper.lambda_ * (-(hyper.lambda_a / T) * acc + hyper.lambda_w * W)


@dataclass
class MeasureState:
    """Quantities derived from one cloud on the training inputs."""

    cloud: ParticleCloud
    H: np.ndarray
    S: np.ndarray
    sol: RidgeSolution


def evaluate_measure(model: FeatureModel, cloud: ParticleCloud, X, Y, hyper: Hyperparams, solver: str = "dense") -> MeasureState:
    H, S = feature_matrix_and_slopes(model, X, cloud.W)
    sol = fit_for_cloud(H, cloud.weights, Y, hyper.bar_lambda_a, solver)
    return MeasureState(cloud=cloud, H=H, S=S, sol=sol)


@dataclass(frozen=True)
class StepReport:
    step: int
    mean_grad_norm: float
    mean_w_sq: float
    objectives: Objectives
    wall_ms: float


def langevin_noise(seed: int, step: int, N: int, d_prime: int) -> np.ndarray:
    """Row j is particle j's standard Gaussian increment for this step."""
    return streams.generator(seed, streams.LANGEVIN, step).standard_normal((N, d_prime))


def apply_update(cloud: ParticleCloud, drift, hyper: Hyperparams, seed: int, step: int) -> ParticleCloud:
    W = cloud.W - hyper.eta * drift
    scale = np.sqrt(2.0 * hyper.eta * hyper.lambda_)
    if scale > 0:
        W = W + scale * langevin_noise(seed, step, cloud.N, cloud.d_prime)
    check_divergence(W, cloud.weights, hyper, step)
    return cloud.with_positions(W)


def check_divergence(W, weights, hyper: Hyperparams, step: int) -> float:
    if not np.all(np.isfinite(W)):
        raise DivergenceError(f"non-finite particle positions after step {step}", step=step)
    mean_w_sq = float(weights @ np.einsum("ij,ij->i", W, W))
    limit = DIVERGENCE_FACTOR * W.shape[1] / hyper.lambda_w
    if mean_w_sq > limit:
        raise DivergenceError(
            f"mean ||w||^2 = {mean_w_sq:.3g} exceeds {limit:.3g} at step {step}; reduce eta",
            step=step,
            mean_w_sq=mean_w_sq,
        )
    return mean_w_sq


def _ou_step(cloud, hyper, seed, step, t0):
    # bar_lambda_a = 0: the second-layer term carries a zero coefficient and the
    # inner problem is not well posed, so skip it and leave its fields NaN
    drift = hyper.lambda_ * hyper.lambda_w * cloud.W
    new_cloud = apply_update(cloud, drift, hyper, seed, step)
    w_sq = cloud.mean_sq_norm()
    obj = Objectives(U=np.nan, G=np.nan, train_mse=np.nan, a_sq_norm=np.nan, w_sq_norm=w_sq, U_closed=np.nan)
    return new_cloud, StepReport(step=step, mean_grad_norm=float(cloud.weights @ np.linalg.norm(drift, axis=1)),
                                 mean_w_sq=w_sq, objectives=obj, wall_ms=1e3 * (time.perf_counter() - t0))


def _step(cloud, dataset, model, hyper, seed, step, solver, state, eps):
    t0 = time.perf_counter()
    if hyper.bar_lambda_a == 0:
        return _ou_step(cloud, hyper, seed, step, t0)
    if state is None:
        state = evaluate_measure(model, cloud, dataset.X, dataset.Y, hyper, solver)
    beta = None if eps is None else state.sol.solve(eps)
    drift = particle_drift(augment(dataset.X), state.H, state.S, state.sol.alpha, cloud.W, hyper, beta=beta)
    obj = objectives(state.sol, dataset.Y, cloud, hyper)
    new_cloud = apply_update(cloud, drift, hyper, seed, step)
    report = StepReport(
        step=step,
        mean_grad_norm=float(cloud.weights @ np.linalg.norm(drift, axis=1)),
        mean_w_sq=obj.w_sq_norm,
        objectives=obj,
        wall_ms=1e3 * (time.perf_counter() - t0),
    )
    return new_cloud, report


def mfld_step(cloud: ParticleCloud, dataset, model: FeatureModel, hyper: Hyperparams, seed: int, step: int,
              solver: str = "dense", state: MeasureState | None = None):
    """One noisy gradient step; returns (new cloud, report at the pre-update measure).

    ``state`` may carry the already-computed features and ridge solution
    for ``cloud`` so the run loop can share them with its diagnostics.
    """
    return _step(cloud, dataset, model, hyper, seed, step, solver, state, eps=None)


def lsi_alpha(hyper: Hyperparams, c_l: float) -> float:
    """Log-Sobolev constant lambda_w * exp(-2 lambda_a c_l^2 / bar_lambda_a^2)."""
    if c_l < 0:
        raise ValueError("c_l must be non-negative")
    if c_l == 0:
        return float(hyper.lambda_w)
    if hyper.bar_lambda_a == 0:
        return 0.0
    return float(hyper.lambda_w * math.exp(-2.0 * hyper.lambda_a * c_l**2 / hyper.bar_lambda_a**2))


def max_stable_eta(hyper: Hyperparams, c_l: float) -> float:
    """Step-size ceiling min(1/4, 1/(4 lambda alpha)) from the convergence analysis."""
    a = lsi_alpha(hyper, c_l)
    return 0.25 if a == 0 or hyper.lambda_ == 0 else min(0.25, 1.0 / (4.0 * hyper.lambda_ * a))
