"""Weighted particle clouds representing the first-layer measure.

Snapshot format (little-endian, used for checkpoints)::

    8 bytes   magic  b"MFLDCLD1"
    int64     N      number of particles
    int64     d'     particle dimension
    float64[N]       weights
    float64[N*d']    W, row-major (particle j occupies W[j*d':(j+1)*d'])
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import DimensionError, NonFiniteError, SnapshotFormatError

SNAPSHOT_MAGIC = b"MFLDCLD1"
_HEADER = struct.Struct("<8sqq")


@dataclass(frozen=True)
class ParticleCloud:
    W: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        W = np.ascontiguousarray(self.W, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if W.ndim != 2 or weights.shape != (W.shape[0],):
            raise DimensionError(f"W must be N x d' with N weights, got {W.shape} and {weights.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(weights))):
            raise NonFiniteError("particle cloud has non-finite entries")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to one")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "weights", weights)

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @property
    def d_prime(self) -> int:
        return self.W.shape[1]

    @classmethod
    def uniform(cls, W) -> "ParticleCloud":
        W = np.asarray(W, dtype=np.float64)
        return cls(W, np.full(W.shape[0], 1.0 / W.shape[0]))

    def with_positions(self, W) -> "ParticleCloud":
        return ParticleCloud(W, self.weights)

    def mean_sq_norm(self) -> float:
        return float(self.weights @ np.einsum("ij,ij->i", self.W, self.W))


def init_cloud(N: int, d_prime: int, lambda_w: float, seed: int) -> ParticleCloud:
    """N i.i.d. draws from N(0, I / lambda_w) with uniform weights."""
    if N < 1 or d_prime < 1:
        raise ValueError("N and d' must be positive")
    if not lambda_w > 0:
        raise ValueError("lambda_w must be positive")
    rng = streams.generator(seed, streams.PARTICLES)
    W = rng.standard_normal((N, d_prime)) / np.sqrt(lambda_w)
    return ParticleCloud.uniform(W)


def weighted_sigma(H, weights) -> np.ndarray:
    """Empirical Gram matrix sum_j weights[j] H[:, j] H[:, j]^T."""
    H = np.asarray(H, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if H.ndim != 2 or weights.shape != (H.shape[1],):
        raise DimensionError(f"H is {H.shape} but got {weights.shape} weights")
    sigma = (H * weights) @ H.T
    # exact symmetry; BLAS may differ in the last bit between the two triangles
    return 0.5 * (sigma + sigma.T)


def mixture_measure(base: ParticleCloud, point, t: float) -> ParticleCloud:
    """(1 - t) * base + t * delta_point as an (N + 1)-particle cloud."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"mixture weight must lie in [0, 1], got {t}")
    point = np.asarray(point, dtype=np.float64)
    if point.shape != (base.d_prime,):
        raise DimensionError(f"point must have shape ({base.d_prime},)")
    W = np.vstack([base.W, point])
    weights = np.append((1.0 - t) * base.weights, t)
    # renormalise away rounding so the sum-to-one invariant holds
    return ParticleCloud(W, weights / weights.sum())


def dump_cloud(cloud: ParticleCloud) -> bytes:
    return (
        _HEADER.pack(SNAPSHOT_MAGIC, cloud.N, cloud.d_prime)
        + cloud.weights.astype("<f8").tobytes()
        + cloud.W.astype("<f8").tobytes()
    )


def load_cloud(buf: bytes) -> ParticleCloud:
    if len(buf) < _HEADER.size:
        raise SnapshotFormatError("truncated snapshot header")
    magic, N, dp = _HEADER.unpack_from(buf)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * (N + N * dp)
    if len(buf) != expected:
        raise SnapshotFormatError(f"snapshot has {len(buf)} bytes, expected {expected}")
    body = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size)
    return ParticleCloud(body[N:].reshape(N, dp).copy(), body[:N].copy())


def save_cloud(cloud: ParticleCloud, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_cloud(cloud))


def read_cloud(path) -> ParticleCloud:
    with open(path, "rb") as fh:
        return load_cloud(fh.read())
