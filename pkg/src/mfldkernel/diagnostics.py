"""Diagnostics of the kernel induced by the first layer."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import streams
from .errors import DimensionError, UndefinedAlignmentError
from .features import FeatureModel, feature_matrix
from .particles import ParticleCloud
from .ridge import RidgeSolution, predict

MC_BATCHES = 20


def kernel_eval(model: FeatureModel, cloud: ParticleCloud, x, x_prime) -> float:
    """k(x, x') = sum_j weights[j] h(x; w_j) h(x'; w_j)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    x_prime = np.atleast_2d(np.asarray(x_prime, dtype=np.float64))
    if x.shape != x_prime.shape or x.shape[0] != 1:
        raise DimensionError("kernel_eval takes two points of equal dimension")
    h = feature_matrix(model, np.vstack([x, x_prime]), cloud.W)
    return float(np.sum(cloud.weights * h[0] * h[1]))


def empirical_alignment(sigma, f_targets) -> float:
    """f^T sigma f / (||f||^2 ||sigma||_F)."""
    sigma = np.asarray(sigma, dtype=np.float64)
    f = np.asarray(f_targets, dtype=np.float64).reshape(-1)
    if sigma.shape != (f.shape[0], f.shape[0]):
        raise DimensionError(f"sigma is {sigma.shape} but targets have length {f.shape[0]}")
    ff = f @ f
    fro = np.linalg.norm(sigma, "fro")
    if ff == 0 or fro == 0:
        raise UndefinedAlignmentError("alignment is undefined for a zero target or a zero kernel")
    return float(f @ sigma @ f / (ff * fro))


def population_alignment(model: FeatureModel, cloud: ParticleCloud, target: Callable, d: int, n_mc: int,
                         seed: int, step: int = 0):
    """Monte-Carlo kernel-target alignment under x, x' ~ N(0, I_d).

    Returns ``(estimate, stderr)``.  The ratio of means is estimated over
    all ``n_mc`` pairs; the standard error comes from batch means of the
    per-batch ratios.
    """
    if n_mc < 100:
        raise ValueError("n_mc must be at least 100")
    rng = streams.generator(seed, streams.ALIGN_MC, step)
    x = rng.standard_normal((n_mc, d))
    xp = rng.standard_normal((n_mc, d))
    fx = np.asarray(target(x), dtype=np.float64).reshape(-1)
    fxp = np.asarray(target(xp), dtype=np.float64).reshape(-1)
    k = (feature_matrix(model, x, cloud.W) * feature_matrix(model, xp, cloud.W)) @ cloud.weights
    num = fx * k * fxp
    f2 = 0.5 * (fx**2 + fxp**2)
    k2 = k**2
    if np.mean(f2) == 0:
        raise UndefinedAlignmentError("target is identically zero on the Monte-Carlo sample")
    if np.mean(k2) == 0:
        raise UndefinedAlignmentError("kernel is identically zero on the Monte-Carlo sample")
    estimate = np.mean(num) / (np.mean(f2) * np.sqrt(np.mean(k2)))
    nb = min(MC_BATCHES, n_mc // 5)
    ratios = []
    for idx in np.array_split(np.arange(n_mc), nb):
        denom = np.mean(f2[idx]) * np.sqrt(np.mean(k2[idx]))
        if denom > 0:
            ratios.append(np.mean(num[idx]) / denom)
    stderr = np.std(ratios, ddof=1) / np.sqrt(len(ratios)) if len(ratios) > 1 else np.nan
    return float(estimate), float(stderr)


def parameter_alignment(cloud: ParticleCloud, u_circ) -> float:
    """Weighted mean squared cosine between u_j and the target direction.

    ``u_circ`` is a direction in R^d, or a d x k matrix whose column span is
    the target subspace (then the squared cosine is ||proj(u)||^2 / ||u||^2).
    The bias coordinate of each particle is dropped; u = 0 contributes 0.
    """
    Uc = np.asarray(u_circ, dtype=np.float64)
    if Uc.ndim == 1:
        Uc = Uc[:, None]
    if Uc.shape[0] != cloud.d_prime - 1:
        raise DimensionError(f"target direction must live in R^{cloud.d_prime - 1}")
    Q, _ = np.linalg.qr(Uc)
    U = cloud.W[:, :-1]
    norms = np.einsum("ij,ij->i", U, U)
    proj = np.sum((U @ Q) ** 2, axis=1)
    cos2 = np.divide(proj, norms, out=np.zeros_like(proj), where=norms > 0)
    return float(cloud.weights @ np.clip(cos2, 0.0, 1.0))


def degrees_of_freedom(sigma_or_sol, lambda_reg: float, n: int | None = None) -> float:
    """tr[sigma (sigma + n lambda I)^{-1}] from the eigenvalues of sigma.

    Passing a :class:`RidgeSolution` whose regulariser equals ``lambda_reg``
    uses the trace identity d = n - n * lambda * tr(M^{-1}) instead.
    """
    if not lambda_reg > 0:
        raise ValueError("lambda_reg must be positive")
    if isinstance(sigma_or_sol, RidgeSolution):
        sol = sigma_or_sol
        if sol.sigma is not None and not np.isclose(lambda_reg, sol.bar_lambda_a, rtol=1e-14, atol=0):
            return degrees_of_freedom(sol.sigma, lambda_reg, n)
        if not np.isclose(lambda_reg, sol.bar_lambda_a, rtol=1e-14, atol=0):
            raise ValueError("low-rank solution only supports its own regulariser")
        m = sol.n
        return float(m - m * lambda_reg * sol.trace_inv())
    sigma = np.asarray(sigma_or_sol, dtype=np.float64)
    if n is None:
        n = sigma.shape[0]
    s = np.clip(np.linalg.eigvalsh(sigma), 0.0, None)
    return float(np.sum(s / (s + n * lambda_reg)))


def alignment_lower_bound(U: float, f_targets, bar_lambda_a: float, n: int) -> float:
    """Jensen lower bound on the empirical alignment for noiseless labels."""
    if not U > 0:
        raise ValueError("U must be positive")
    f = np.asarray(f_targets, dtype=np.float64).reshape(-1)
    return float(bar_lambda_a * (f @ f) / (2.0 * U * n) - bar_lambda_a)


def test_loss(model: FeatureModel, cloud: ParticleCloud, sol: RidgeSolution, test_X, test_Y) -> float:
    """Held-out mean squared error of the network's predictions."""
    test_X = np.asarray(test_X, dtype=np.float64)
    test_Y = np.asarray(test_Y, dtype=np.float64)
    if test_X.shape[0] == 0:
        raise ValueError("empty test set")
    if test_Y.ndim == 1:
        test_Y = test_Y[:, None]
    pred = predict(model, test_X, cloud, sol)
    return float(np.mean((pred - test_Y) ** 2))


test_loss.__test__ = False
