import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfldkernel.errors import DimensionError, NonFiniteError
from mfldkernel.features import (
    FeatureModel,
    augment,
    feature_grad,
    feature_matrix,
    feature_matrix_and_slopes,
    feature_value,
    particle_jacobian,
    sech2,
)

M = FeatureModel.TANH_AFFINE

# tanh(0.5) and 1 - tanh(3)^2 at 30 digits
TANH_HALF = 0.462117157260009758502318483644
SECH2_THREE = 0.00986603716544019127315616968348


def test_value_at_known_point():
    # u.x + b = 0.25 - 0.5 + 0.75 = 0.5
    assert feature_value(M, [1.0, 2.0], [0.25, -0.25, 0.75]) == pytest.approx(TANH_HALF, rel=1e-15)


def test_param_dim():
    assert M.param_dim(15) == 16


def test_sech2_known_value_and_tails():
    assert sech2(3.0) == pytest.approx(SECH2_THREE, rel=1e-14)
    with np.errstate(over="raise", invalid="raise"):
        big = sech2(np.array([-1e4, 1e4, 800.0]))
    assert np.all(big == 0.0)
    z = np.linspace(-5, 5, 101)
    np.testing.assert_allclose(sech2(z), 1 - np.tanh(z) ** 2, rtol=1e-12, atol=1e-15)


def test_grad_at_zero_preactivation_is_augmented_input():
    x = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(feature_grad(M, x, np.zeros(4)), [0.3, -1.2, 2.0, 1.0])


def test_grad_matches_central_differences(rng):
    for _ in range(20):
        x, w = rng.standard_normal(4), rng.standard_normal(5)
        h = 1e-6
        fd = [(feature_value(M, x, w + h * e) - feature_value(M, x, w - h * e)) / (2 * h) for e in np.eye(5)]
        np.testing.assert_allclose(feature_grad(M, x, w), fd, rtol=1e-7, atol=1e-10)


def test_matrix_matches_scalar_loop(rng):
    X, W = rng.standard_normal((7, 3)), rng.standard_normal((4, 4))
    H, S = feature_matrix_and_slopes(M, X, W)
    loop = np.array([[feature_value(M, x, w) for w in W] for x in X])
    np.testing.assert_allclose(H, loop, rtol=1e-15)
    np.testing.assert_array_equal(H, feature_matrix(M, X, W))
    np.testing.assert_allclose(S, 1 - loop**2, rtol=1e-12)


def test_jacobian_rows_are_feature_grads(rng):
    X, w = rng.standard_normal((6, 3)), rng.standard_normal(4)
    J = particle_jacobian(M, X, w)
    np.testing.assert_allclose(J, [feature_grad(M, x, w) for x in X], rtol=1e-14)
    assert augment(X).shape == (6, 4)


def test_dimension_and_finiteness_errors():
    with pytest.raises(DimensionError):
        feature_value(M, [1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DimensionError):
        feature_matrix(M, np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(NonFiniteError):
        feature_matrix(M, np.array([[np.nan, 0.0]]), np.zeros((1, 3)))


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_feature_bounded_and_slope_in_unit_interval(x0, u0, b):
    v = feature_value(M, [x0], [u0, b])
    g = feature_grad(M, [x0], [u0, b])
    assert -1.0 <= v <= 1.0
    assert 0.0 <= g[-1] <= 1.0
