"""Tests para el verificador por diferencias finitas."""

import numpy as np

from amr_cam.numcore.gradcheck import (
    check_gradients,
    numerical_gradient,
    relative_error,
)
from amr_cam.numcore.tensor import Tensor, from_op


def test_numerical_gradient_of_quadratic():
    values = np.array([1.0, -2.0, 3.0])
    grad = numerical_gradient(lambda: float(np.sum(values**2)), values)
    np.testing.assert_allclose(grad, 2.0 * np.array([1.0, -2.0, 3.0]), atol=1e-6)
    np.testing.assert_array_equal(values, [1.0, -2.0, 3.0])


def test_relative_error_of_zero_gradients():
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0


def _wrong_square(x: Tensor) -> Tensor:
    values = x.data**2

    def vjp(grad):
        return (grad * x.data,)

    return from_op("wrong_square", values, (x,), vjp)


def test_detects_a_wrong_vjp(rng):
    report = check_gradients(lambda t: _wrong_square(t["x"]), {"x": rng.normal(size=4)})
    assert not report.passed()
