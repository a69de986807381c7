"""Label-noise training: fresh uniform noise on the labels of the inner solve.

The noisy first variation splits into the clean envelope term minus the
same term with the noise as labels:

    lambda * (-(lambda_a / 2T) sum_t (a_t(w)^2 - e_t(w)^2) + (lambda_w / 2) ||w||^2)

where a_t = h(X; w)^T M^{-1} Y_t and e_t = h(X; w)^T M^{-1} eps_t.  Both
solves share one factorisation of M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import streams
from .diagnostics import degrees_of_freedom
from .dynamics import MeasureState, _step, evaluate_measure
from .features import FeatureModel
from .particles import ParticleCloud
from .ridge import Hyperparams, RidgeSolution, objectives


@dataclass(frozen=True)
class NoiseDraw:
    eps: np.ndarray
    step: int


def sample_label_noise(n: int, T: int, tilde_sigma: float, seed: int, step: int) -> NoiseDraw:
    """Entries i.i.d. uniform on [-tilde_sigma, tilde_sigma], one stream per task."""
    if tilde_sigma < 0:
        raise ValueError("tilde_sigma must be non-negative")
    eps = np.zeros((n, T))
    if tilde_sigma > 0:
        for t in range(T):
            eps[:, t] = streams.generator(seed, streams.LABEL_NOISE, step, t).uniform(-tilde_sigma, tilde_sigma, n)
    return NoiseDraw(eps=eps, step=step)


def noisy_first_variation(a_at_w, e_at_w, w, hyper: Hyperparams) -> float:
    a = np.atleast_1d(np.asarray(a_at_w, dtype=np.float64))
    e = np.atleast_1d(np.asarray(e_at_w, dtype=np.float64))
    w = np.asarray(w, dtype=np.float64)
    T = a.shape[0]
    return float(hyper.lambda_ * (-0.5 * hyper.lambda_a / T * (a @ a - e @ e) + 0.5 * hyper.lambda_w * (w @ w)))


def noisy_mfld_step(cloud: ParticleCloud, dataset, model: FeatureModel, hyper: Hyperparams, seed: int, step: int,
                    solver: str = "dense", state: MeasureState | None = None):
    """Label-noise step; with tilde_sigma = 0 it reproduces the plain step bit for bit."""
    n, T = dataset.Y.shape
    draw = sample_label_noise(n, T, hyper.tilde_sigma, seed, step)
    return _step(cloud, dataset, model, hyper, seed, step, solver, state, eps=draw.eps)


def regularized_objective(sol: RidgeSolution, Y, cloud: ParticleCloud, hyper: Hyperparams) -> float:
    """G + (bar_lambda_a tilde_sigma^2 / 6n) * d_{bar_lambda_a}; entropy omitted."""
    G = objectives(sol, Y, cloud, hyper).G
    if hyper.tilde_sigma == 0:
        return G
    n = sol.n
    dof = degrees_of_freedom(sol.sigma if sol.sigma is not None else sol, hyper.bar_lambda_a, n)
    return G + hyper.bar_lambda_a * hyper.tilde_sigma**2 / (6.0 * n) * dof


@dataclass(frozen=True)
class SigmaCondition:
    ok: bool
    margin: float


def sigma_condition(Y, tilde_sigma: float) -> SigmaCondition:
    """Admissibility tilde_sigma^2 / 3 <= lambda_min((1/T) sum_t Y_t Y_t^T)."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, T = Y.shape
    if T < n:
        lam_min = 0.0
    else:
        lam_min = float(np.linalg.eigvalsh(Y @ Y.T / T)[0])
    margin = lam_min - tilde_sigma**2 / 3.0
    return SigmaCondition(ok=margin >= 0, margin=margin)


@dataclass(frozen=True)
class NoiseExpectation:
    mc_mean: float
    closed_form: float
    rel_err: float
    clean_U: float
    trace_inv: float


def noisy_U(sol: RidgeSolution, Y, eps) -> float:
    """U with the inner problem fitted on Y + eps but the loss measured on Y."""
    Y = np.asarray(Y, dtype=np.float64)
    T = Y.shape[1]
    c = sol.bar_lambda_a
    quad_y = np.sum(Y * sol.alpha)
    quad_e = np.sum(eps * sol.solve(eps))
    return float((0.5 * c * quad_y - 0.5 * c * quad_e + np.sum(eps * eps) / (2 * sol.n)) / T)


def noise_expectation_check(cloud: ParticleCloud, dataset, hyper: Hyperparams, K: int, seed: int,
                            model: FeatureModel = FeatureModel.TANH_AFFINE, solver: str = "dense") -> NoiseExpectation:
    """Monte-Carlo mean of the noisy U over K draws against its closed form."""
    if K < 1:
        raise ValueError("K must be positive")
    state = evaluate_measure(model, cloud, dataset.X, dataset.Y, hyper, solver)
    sol = state.sol
    Y = dataset.Y
    n, T = Y.shape
    ts = hyper.tilde_sigma
    c = hyper.bar_lambda_a
    clean_U = float(0.5 * c * np.sum(Y * sol.alpha) / T)
    tr = sol.trace_inv()
    closed = clean_U - c * ts**2 / 6.0 * tr + ts**2 / 6.0
    if ts == 0:
        mc = noisy_U(sol, Y, np.zeros_like(Y))
    else:
        rng = streams.generator(seed, streams.LABEL_NOISE + "-check")
        total = 0.0
        batch = 256
        done = 0
        while done < K:
            b = min(batch, K - done)
            E = rng.uniform(-ts, ts, size=(n, b * T))
            ME = sol.solve(E)
            quad_e = np.einsum("ij,ij->j", E, ME).reshape(b, T).sum(axis=1)
            sq_e = np.einsum("ij,ij->j", E, E).reshape(b, T).sum(axis=1)
            total += np.sum(clean_U - (0.5 * c * quad_e - sq_e / (2 * n)) / T)
            done += b
        mc = total / K
    rel = abs(mc - closed) / abs(closed) if closed != 0 else abs(mc - closed)
    return NoiseExpectation(mc_mean=float(mc), closed_form=float(closed), rel_err=float(rel), clean_U=clean_U, trace_inv=tr)
