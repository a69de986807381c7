"""Synthetic regression data: Gaussian inputs, low-dimensional targets, uniform noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import ConfigError

TARGET_KINDS = ("product12", "single_index_tanh")


@dataclass(frozen=True)
class Target:
    """Noiseless target f(x); ``directions`` spans the relevant input subspace (d x k)."""

    kind: str
    directions: np.ndarray
    kappa: float = 1.0

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.kind == "product12":
            return X[:, 0] * X[:, 1]
        if self.kind == "single_index_tanh":
            return np.tanh(self.kappa * (X @ self.directions[:, 0]))
        raise ConfigError(f"unknown target kind {self.kind!r}")


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    f_clean: np.ndarray
    test_X: np.ndarray
    test_Y_clean: np.ndarray
    target: Target
    sigma: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def make_target(kind: str, d: int, kappa: float, rng: np.random.Generator) -> Target:
    if kind == "product12":
        if d < 2:
            raise ConfigError("product12 needs d >= 2")
        return Target(kind, np.eye(d)[:, :2], kappa)
    if kind == "single_index_tanh":
        u = rng.standard_normal(d)
        return Target(kind, (u / np.linalg.norm(u))[:, None], kappa)
    raise ConfigError(f"unknown target kind {kind!r}; expected one of {TARGET_KINDS}")


def gen_synthetic(d: int, n_train: int, n_test: int, target: str = "product12", sigma: float = 0.0,
                  kappa: float = 2.0, seed: int = 0) -> Dataset:
    """x ~ N(0, I_d), y = f(x) + eps with eps ~ Unif[-sigma, sigma].

    The noise is drawn as sigma * Unif[-1, 1] so that runs sharing a seed
    see the same inputs and the same noise pattern at every sigma.
    """
    if d < 1 or n_train < 1 or n_test < 1:
        raise ConfigError("d, n_train and n_test must be positive")
    if sigma < 0:
        raise ConfigError("sigma must be non-negative")
    rng = streams.generator(seed, streams.DATA)
    tgt = make_target(target, d, kappa, rng)
    X = rng.standard_normal((n_train, d))
    unit_noise = rng.uniform(-1.0, 1.0, n_train)
    test_X = rng.standard_normal((n_test, d))
    f_clean = tgt(X)[:, None]
    Y = f_clean + sigma * unit_noise[:, None]
    return Dataset(X=X, Y=Y, f_clean=f_clean, test_X=test_X, test_Y_clean=tgt(test_X)[:, None],
                   target=tgt, sigma=sigma)
