"""Tests para el SGD con momento."""

import numpy as np
import pytest

from amr_cam.numcore import OptimizerStateError
from amr_cam.numcore.optim import OptimState, sgd_step
from amr_cam.numcore.tensor import Tensor


def _with_grad(value, grad):
    param = Tensor(np.array(value, dtype=np.float64), requires_grad=True)
    param.grad = np.array(grad, dtype=param.dtype)
    return param


def test_vanilla_step():
    param = _with_grad([5.0, -1.0], [2.0, 0.5])
    sgd_step([param], OptimState(learning_rate=1.0, momentum=0.0, weight_decay=0.0))
    np.testing.assert_allclose(param.data, [3.0, -1.5])
    assert param.grad is None


def test_momentum_recurrence():
    state = OptimState(learning_rate=0.01, momentum=0.9, weight_decay=0.0)
    param = _with_grad([1.0], [2.0])
    sgd_step([param], state)
    param.grad = np.array([2.0], dtype=param.dtype)
    sgd_step([param], state)
    np.testing.assert_allclose(state.buffers[0], [1.9 * 2.0], rtol=1e-6)


def test_weight_decay_enters_the_velocity():
    state = OptimState(learning_rate=1.0, momentum=0.0, weight_decay=0.5)
    param = _with_grad([2.0], [0.0])
    sgd_step([param], state)
    np.testing.assert_allclose(param.data, [1.0])


def test_quadratic_bowl_converges():
    state = OptimState(learning_rate=0.1, momentum=0.0, weight_decay=0.0)
    param = Tensor(np.array([1.0]), requires_grad=True)
    for _ in range(100):
        param.grad = 2.0 * param.data
        sgd_step([param], state)
    assert abs(param.data[0]) < 1e-4


def test_missing_gradient():
    with pytest.raises(OptimizerStateError):
        sgd_step([Tensor([1.0], requires_grad=True)], OptimState(learning_rate=0.1))


def test_buffer_count_mismatch():
    state = OptimState(learning_rate=0.1, buffers=[np.zeros(1), np.zeros(1)])
    with pytest.raises(OptimizerStateError):
        sgd_step([_with_grad([1.0], [1.0])], state)
