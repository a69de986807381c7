"""Fast self-checks run by ``mfldkernel check``.

Each check compares an analytic path against an independent numerical
oracle (finite differences, closed forms, inequalities) on small random
instances and reports the worst error seen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import alignment_lower_bound, degrees_of_freedom, empirical_alignment
from .dynamics import first_variation, grad_first_variation, particle_drift
from .features import FeatureModel, augment, feature_matrix, feature_matrix_and_slopes, particle_jacobian
from .label_noise import noisy_first_variation
from .particles import ParticleCloud, mixture_measure, weighted_sigma
from .ridge import Hyperparams, fit_second_layer, objectives, second_layer_values

MODEL = FeatureModel.TANH_AFFINE


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float


def random_instance(rng, n=20, N=8, d=5, T=1, scale=1.0):
    X = rng.standard_normal((n, d))
    cloud = ParticleCloud.uniform(scale * rng.standard_normal((N, d + 1)))
    Y = np.tanh(X[:, :T] * X[:, 1:T + 1]) if d > T else rng.uniform(-1, 1, (n, T))
    hyper = Hyperparams(lambda_=rng.uniform(0.05, 0.5), lambda_a=rng.uniform(0.2, 2.0),
                        lambda_w=rng.uniform(0.1, 1.0), eta=0.1, tilde_sigma=0.5)
    return X, Y, cloud, hyper


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def check_gradient(probes=100, seed=0, h=1e-4, tol=1e-5, noisy=False) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        X, Y, cloud, hyper = random_instance(rng)
        H = feature_matrix(MODEL, X, cloud.W)
        sol = fit_second_layer(weighted_sigma(H, cloud.weights), Y, hyper.bar_lambda_a)
        beta = sol.solve(rng.uniform(-0.5, 0.5, Y.shape)) if noisy else None
        j = int(rng.integers(cloud.N))
        w = cloud.W[j]

        def fv(v):
            hv = feature_matrix(MODEL, X, v[None, :])[:, 0]
            if noisy:
                return noisy_first_variation(hv @ sol.alpha, hv @ beta, v, hyper)
            return first_variation(hv @ sol.alpha, v, hyper)

        fd = np.array([(fv(w + h * e) - fv(w - h * e)) / (2 * h) for e in np.eye(w.size)])
        H, S = feature_matrix_and_slopes(MODEL, X, cloud.W)
        g = particle_drift(augment(X), H, S, sol.alpha, cloud.W, hyper, beta=beta)[j]
        if not noisy:
            g_ref = grad_first_variation(j, H, particle_jacobian(MODEL, X, w), sol, w, hyper)
            worst = max(worst, _rel(g_ref, fd))
        worst = max(worst, _rel(g, fd))
    return CheckResult("noisy drift vs finite differences" if noisy else "drift vs finite differences",
                       worst <= tol, worst, tol)


def G_of(cloud, X, Y, hyper):
    H = feature_matrix(MODEL, X, cloud.W)
    sol = fit_second_layer(weighted_sigma(H, cloud.weights), Y, hyper.bar_lambda_a)
    return objectives(sol, Y, cloud, hyper).G


def check_first_variation(probes=20, seed=1, t=1e-4, tol=1e-3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        X, Y, cloud, hyper = random_instance(rng)
        point = rng.standard_normal(cloud.d_prime)
        G0 = G_of(cloud, X, Y, hyper)
        # Richardson extrapolation of the one-sided difference quotient
        D1 = (G_of(mixture_measure(cloud, point, t), X, Y, hyper) - G0) / t
        D2 = (G_of(mixture_measure(cloud, point, t / 2), X, Y, hyper) - G0) / (t / 2)
        deriv = 2 * D2 - D1
        H = feature_matrix(MODEL, X, cloud.W)
        sol = fit_second_layer(weighted_sigma(H, cloud.weights), Y, hyper.bar_lambda_a)
        A = second_layer_values(H, sol)
        mean_fv = sum(wt * first_variation(A[j], cloud.W[j], hyper) for j, wt in enumerate(cloud.weights))
        hp = feature_matrix(MODEL, X, point[None, :])[:, 0]
        expected = first_variation(hp @ sol.alpha, point, hyper) - mean_fv
        worst = max(worst, abs(deriv - expected) / max(abs(expected), 1e-12))
    return CheckResult("first variation vs mixture derivative", worst <= tol, worst, tol)


def check_identities(probes=100, seed=2, tol=1e-8) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_u = worst_tr = 0.0
    violations = 0
    for _ in range(probes):
        X, Y, cloud, hyper = random_instance(rng)
        sigma = weighted_sigma(feature_matrix(MODEL, X, cloud.W), cloud.weights)
        sol = fit_second_layer(sigma, Y, hyper.bar_lambda_a)
        obj = objectives(sol, Y, cloud, hyper)
        worst_u = max(worst_u, abs(obj.U - obj.U_closed) / abs(obj.U_closed))
        n = X.shape[0]
        dof = degrees_of_freedom(sigma, hyper.bar_lambda_a, n)
        worst_tr = max(worst_tr, abs(sol.trace_inv() * n * hyper.bar_lambda_a + dof - n) / n)
        f = Y[:, 0]
        if empirical_alignment(sigma, f) < alignment_lower_bound(obj.U, f, hyper.bar_lambda_a, n):
            violations += 1
    return [
        CheckResult("U sum of parts vs closed form", worst_u <= tol, worst_u, tol),
        CheckResult("trace identity tr(M^-1) n lambda + dof = n", worst_tr <= tol, worst_tr, tol),
        CheckResult("alignment >= Jensen lower bound", violations == 0, float(violations), 0.0),
    ]


def run_all() -> list[CheckResult]:
    return [check_gradient(), check_gradient(noisy=True), check_first_variation(), *check_identities()]
