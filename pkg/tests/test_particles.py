import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfldkernel.errors import DimensionError, NonFiniteError, SnapshotFormatError
from mfldkernel.particles import (
    ParticleCloud,
    dump_cloud,
    init_cloud,
    load_cloud,
    mixture_measure,
    read_cloud,
    save_cloud,
    weighted_sigma,
)


def test_init_moments_match_gaussian():
    lam_w, N, dp = 0.25, 200_000, 4
    cloud = init_cloud(N, dp, lam_w, seed=3)
    # per-coordinate variance 1/lambda_w; mean square norm d'/lambda_w
    assert cloud.W.mean() == pytest.approx(0.0, abs=5 * 2 / np.sqrt(N * dp))
    np.testing.assert_allclose(cloud.W.var(axis=0), 1 / lam_w, rtol=0.02)
    assert cloud.mean_sq_norm() == pytest.approx(dp / lam_w, rel=0.01)
    np.testing.assert_array_equal(cloud.weights, np.full(N, 1 / N))


def test_init_is_seeded():
    a, b, c = init_cloud(10, 3, 1.0, 0), init_cloud(10, 3, 1.0, 0), init_cloud(10, 3, 1.0, 1)
    np.testing.assert_array_equal(a.W, b.W)
    assert not np.array_equal(a.W, c.W)


def test_cloud_validation():
    with pytest.raises(ValueError):
        ParticleCloud(np.zeros((2, 3)), np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        ParticleCloud(np.zeros((2, 3)), np.array([1.5, -0.5]))
    with pytest.raises(DimensionError):
        ParticleCloud(np.zeros((2, 3)), np.array([1.0]))
    with pytest.raises(NonFiniteError):
        ParticleCloud(np.array([[np.inf, 0.0]]), np.array([1.0]))
    with pytest.raises(ValueError):
        init_cloud(5, 3, 0.0, 0)


def test_sigma_is_weighted_sum_of_outer_products(rng):
    H = rng.standard_normal((6, 4))
    wts = rng.dirichlet(np.ones(4))
    expected = sum(wts[j] * np.outer(H[:, j], H[:, j]) for j in range(4))
    S = weighted_sigma(H, wts)
    np.testing.assert_allclose(S, expected, rtol=1e-13, atol=1e-15)
    np.testing.assert_array_equal(S, S.T)
    assert np.linalg.eigvalsh(S).min() > -1e-12


def test_sigma_is_linear_in_measure(rng):
    H1, H2 = rng.standard_normal((5, 3)), rng.standard_normal((5, 2))
    w1, w2 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2))
    t = 0.3
    mixed = weighted_sigma(np.hstack([H1, H2]), np.concatenate([(1 - t) * w1, t * w2]))
    np.testing.assert_allclose(mixed, (1 - t) * weighted_sigma(H1, w1) + t * weighted_sigma(H2, w2), rtol=1e-12)


def test_mixture_measure():
    base = ParticleCloud.uniform(np.arange(6.0).reshape(3, 2))
    mix = mixture_measure(base, np.array([9.0, 9.0]), 0.25)
    assert mix.N == 4
    np.testing.assert_allclose(mix.weights, [0.25, 0.25, 0.25, 0.25])
    np.testing.assert_array_equal(mix.W[-1], [9.0, 9.0])
    with pytest.raises(ValueError):
        mixture_measure(base, np.zeros(2), 1.5)
    with pytest.raises(DimensionError):
        mixture_measure(base, np.zeros(3), 0.1)


def test_snapshot_layout_is_documented_bytes():
    cloud = ParticleCloud(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([0.25, 0.75]))
    buf = dump_cloud(cloud)
    assert buf[:8] == b"MFLDCLD1"
    assert np.frombuffer(buf[8:24], "<i8").tolist() == [2, 2]
    assert np.frombuffer(buf[24:], "<f8").tolist() == [0.25, 0.75, 1.0, 2.0, 3.0, 4.0]


def test_snapshot_round_trip(tmp_path, rng):
    cloud = ParticleCloud(rng.standard_normal((7, 5)), rng.dirichlet(np.ones(7)))
    path = tmp_path / "c.bin"
    save_cloud(cloud, path)
    back = read_cloud(path)
    np.testing.assert_array_equal(back.W, cloud.W)
    np.testing.assert_array_equal(back.weights, cloud.weights)


@pytest.mark.parametrize("mangle", [lambda b: b[:10], lambda b: b"XXXXXXXX" + b[8:], lambda b: b + b"\0" * 8])
def test_snapshot_rejects_corruption(mangle):
    buf = dump_cloud(ParticleCloud.uniform(np.zeros((2, 2))))
    with pytest.raises(SnapshotFormatError):
        load_cloud(mangle(buf))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31))
def test_snapshot_round_trip_property(N, dp, seed):
    cloud = init_cloud(N, dp, 1.0, seed)
    back = load_cloud(dump_cloud(cloud))
    np.testing.assert_array_equal(back.W, cloud.W)
