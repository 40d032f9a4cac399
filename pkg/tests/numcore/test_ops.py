"""Tests para las operaciones diferenciables."""

import numpy as np
import pytest

from amr_cam.numcore import DimensionError
from amr_cam.numcore.gradcheck import check_gradients
from amr_cam.numcore.ops import (
    broadcast_shape,
    conv2d,
    elementwise,
    linear,
    normalize_max,
    pool,
    reduce_mean,
    reshape,
    soft_margin,
)
from amr_cam.numcore.tensor import Graph, Tensor


def test_conv2d_identity_kernel():
    out = conv2d(Tensor(np.full((1, 1, 1, 1), 5.0)), Tensor(np.ones((1, 1, 1, 1))))
    np.testing.assert_allclose(out.numpy(), [[[[5.0]]]])


def test_conv2d_box_filter_keeps_constant_interior():
    image = Tensor(np.full((1, 1, 5, 5), 2.0))
    kernel = Tensor(np.full((1, 1, 3, 3), 1.0 / 9.0))
    out = conv2d(image, kernel, padding=1).numpy()
    assert out.shape == (1, 1, 5, 5)
    np.testing.assert_allclose(out[0, 0, 1:-1, 1:-1], 2.0, rtol=1e-6)
    assert out[0, 0, 0, 0] < 2.0


def test_conv2d_output_shape_with_stride():
    out = conv2d(Tensor(np.zeros((2, 3, 9, 9))), Tensor(np.zeros((4, 3, 3, 3))), 2, 1)
    assert out.shape == (2, 4, 5, 5)


def test_conv2d_channel_mismatch():
    with pytest.raises(DimensionError):
        conv2d(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))))


def test_conv2d_kernel_larger_than_input():
    with pytest.raises(DimensionError):
        conv2d(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 3, 3))))


@pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 1)])
def test_conv2d_gradients(rng, stride, padding):
    report = check_gradients(
        lambda t: conv2d(t["x"], t["k"], stride=stride, padding=padding),
        {"x": rng.normal(size=(1, 2, 5, 5)), "k": rng.normal(size=(3, 2, 3, 3))},
    )
    assert report.passed(), report.errors


def test_conv2d_column_kernel_gradients(rng):
    report = check_gradients(
        lambda t: conv2d(t["x"], t["k"], padding=(1, 0)),
        {"x": rng.normal(size=(2, 1, 6, 1)), "k": rng.normal(size=(1, 1, 3, 1))},
    )
    assert report.passed(), report.errors


def test_spatial_average():
    out = pool(Tensor(np.array([[[[1.0, 2.0], [3.0, 4.0]]]])), "spatial_avg")
    assert out.shape == (1, 1, 1, 1)
    np.testing.assert_allclose(out.numpy().reshape(-1), [2.5])


def test_channel_average():
    values = np.stack([np.full((3, 3), 1.0), np.full((3, 3), 3.0)])[None]
    out = pool(Tensor(values), "channel_avg")
    assert out.shape == (1, 1, 3, 3)
    np.testing.assert_allclose(out.numpy(), 2.0)


def test_global_average_shape():
    assert pool(Tensor(np.ones((2, 4, 3, 3))), "global_avg").shape == (2, 4)


def test_pool_wrong_rank():
    with pytest.raises(DimensionError):
        pool(Tensor(np.ones((2, 3))), "global_avg")


def test_spatial_average_gradient_is_uniform():
    x = Tensor(np.ones((1, 1, 2, 4)), requires_grad=True)
    with Graph() as graph:
        graph.backward(pool(x, "spatial_avg"))
    np.testing.assert_allclose(x.grad, 1.0 / 8.0)


@pytest.mark.parametrize("mode", ["spatial_avg", "channel_avg", "global_avg"])
def test_pool_gradients(rng, mode):
    report = check_gradients(
        lambda t: pool(t["x"], mode), {"x": rng.normal(size=(2, 3, 4, 4))}
    )
    assert report.passed(), report.errors


def test_linear_identity():
    values = np.array([[1.0, -2.0, 3.0]])
    out = linear(Tensor(values), Tensor(np.eye(3)))
    np.testing.assert_allclose(out.numpy(), values)


def test_linear_mismatch():
    with pytest.raises(DimensionError):
        linear(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))


def test_linear_gradients(rng):
    report = check_gradients(
        lambda t: linear(t["x"], t["w"]),
        {"x": rng.normal(size=(2, 3)), "w": rng.normal(size=(4, 3))},
    )
    assert report.passed(), report.errors


def test_broadcast_scaling():
    attention = Tensor(np.array([0.5, 1.0, 2.0]).reshape(1, 3, 1, 1))
    out = elementwise(attention, Tensor(np.ones((1, 3, 2, 2))), "mul").numpy()
    for channel, value in enumerate([0.5, 1.0, 2.0]):
        np.testing.assert_allclose(out[0, channel], value)


def test_sigmoid_of_zero():
    np.testing.assert_allclose(elementwise(Tensor([0.0]), op="sigmoid").numpy(), [0.5])


def test_sigmoid_is_stable_for_large_inputs():
    out = elementwise(Tensor([-200.0, 200.0]), op="sigmoid").numpy()
    np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-30)


def test_non_broadcastable_shapes():
    with pytest.raises(DimensionError):
        elementwise(Tensor(np.ones((1, 2))), Tensor(np.ones((1, 3))), "add")
    with pytest.raises(DimensionError):
        broadcast_shape((2, 3), (3,))


def test_binary_op_requires_other():
    with pytest.raises(ValueError):
        elementwise(Tensor([1.0]), op="mul")


@pytest.mark.parametrize("op", ["mul", "add", "sub"])
def test_binary_gradients_with_broadcast(rng, op):
    report = check_gradients(
        lambda t: elementwise(t["a"], t["b"], op),
        {"a": rng.normal(size=(2, 3, 1, 1)), "b": rng.normal(size=(2, 3, 2, 2))},
    )
    assert report.passed(), report.errors


@pytest.mark.parametrize("op", ["relu", "sigmoid", "abs"])
def test_unary_gradients_away_from_zero(rng, op):
    values = rng.normal(size=(2, 3))
    values = np.where(np.abs(values) < 0.1, 0.5, values)
    report = check_gradients(lambda t: elementwise(t["x"], op=op), {"x": values})
    assert report.passed(), report.errors


def test_relu_gradient_mask():
    x = Tensor([-1.0, 2.0, 0.0], requires_grad=True)
    with Graph() as graph:
        graph.backward(elementwise(x, op="relu"))
    np.testing.assert_allclose(x.grad, [0.0, 1.0, 0.0])


def test_reshape_size_mismatch():
    with pytest.raises(DimensionError):
        reshape(Tensor(np.ones((2, 3))), (4, 2))


def test_reduce_mean_value():
    out = reduce_mean(Tensor(np.arange(6.0).reshape(2, 3)))
    assert out.item() == pytest.approx(2.5)


def test_soft_margin_matches_definition():
    logits = np.array([[-3.0, 0.0, 4.0]])
    targets = np.array([[1.0, 0.0, 1.0]])
    expected = -(
        targets * np.log(1 / (1 + np.exp(-logits)))
        + (1 - targets) * np.log(1 - 1 / (1 + np.exp(-logits)))
    )
    np.testing.assert_allclose(
        soft_margin(Tensor(logits), targets).numpy(), expected, rtol=1e-6
    )


def test_soft_margin_gradients(rng):
    targets = (rng.random((2, 4)) > 0.5).astype(float)
    report = check_gradients(
        lambda t: soft_margin(t["x"], targets), {"x": rng.normal(size=(2, 4))}
    )
    assert report.passed(), report.errors


def test_normalize_max_values():
    out = normalize_max(Tensor(np.array([[[1.0, 2.0, 4.0]]]))).numpy()
    np.testing.assert_allclose(out, [[[0.25, 0.5, 1.0]]])


def test_normalize_max_zero_map_stays_zero():
    np.testing.assert_allclose(normalize_max(Tensor(np.zeros((1, 2, 2)))).numpy(), 0.0)


def test_normalize_max_gradients(rng):
    values = rng.random((2, 3, 3)) + 0.1
    values[..., 1, 1] += 1.0
    report = check_gradients(lambda t: normalize_max(t["x"]), {"x": values})
    assert report.passed(), report.errors


def _away_from_zero(values: np.ndarray) -> np.ndarray:
    return np.where(np.abs(values) < 0.1, 0.5, values)


SEEDED_CASES = {
    "conv2d": (
        lambda t: conv2d(t["x"], t["k"], stride=2, padding=1),
        lambda r: {"x": r.normal(size=(1, 2, 5, 5)), "k": r.normal(size=(2, 2, 3, 3))},
    ),
    "spatial_avg": (
        lambda t: pool(t["x"], "spatial_avg"),
        lambda r: {"x": r.normal(size=(2, 3, 3, 3))},
    ),
    "channel_avg": (
        lambda t: pool(t["x"], "channel_avg"),
        lambda r: {"x": r.normal(size=(2, 3, 3, 3))},
    ),
    "linear": (
        lambda t: linear(t["x"], t["w"]),
        lambda r: {"x": r.normal(size=(2, 3)), "w": r.normal(size=(4, 3))},
    ),
    "mul": (
        lambda t: elementwise(t["a"], t["b"], "mul"),
        lambda r: {"a": r.normal(size=(2, 3, 1, 1)), "b": r.normal(size=(2, 3, 2, 2))},
    ),
    "sub": (
        lambda t: elementwise(t["a"], t["b"], "sub"),
        lambda r: {"a": r.normal(size=(2, 1, 3)), "b": r.normal(size=(2, 4, 3))},
    ),
    "relu": (
        lambda t: elementwise(t["x"], op="relu"),
        lambda r: {"x": _away_from_zero(r.normal(size=(3, 4)))},
    ),
    "sigmoid": (
        lambda t: elementwise(t["x"], op="sigmoid"),
        lambda r: {"x": r.normal(size=(3, 4)) * 3.0},
    ),
    "abs": (
        lambda t: elementwise(t["x"], op="abs"),
        lambda r: {"x": _away_from_zero(r.normal(size=(3, 4)))},
    ),
}


@pytest.mark.parametrize("seed", range(100))
@pytest.mark.parametrize("case", sorted(SEEDED_CASES))
def test_gradients_on_seeded_instances(case, seed):
    build, make_inputs = SEEDED_CASES[case]
    report = check_gradients(build, make_inputs(np.random.default_rng(seed)), seed=seed)
    assert report.passed(), report.errors
