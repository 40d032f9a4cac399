"""Tests para las funciones de modulación."""

import numpy as np
import pytest
from pydantic import ValidationError

from amr_cam.models.schemas import ModulationFn
from amr_cam.network.modulation import (
    FrozenStatistics,
    GaussianModulator,
    modulate,
    modulator_for,
    stats,
)
from amr_cam.numcore import DimensionError
from amr_cam.numcore.gradcheck import check_gradients
from amr_cam.numcore.tensor import Graph, Tensor

GAUSSIAN = ModulationFn()


def test_stats_of_small_vector():
    result = stats(Tensor([1.0, 2.0, 3.0]))
    assert result.mu == pytest.approx(2.0)
    assert result.sigma == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-5)
    assert result.count == 3


def test_stats_of_constant_vector():
    result = stats(np.array([5.0, 5.0, 5.0]))
    assert result.mu == 5.0
    assert result.sigma == 0.0


def test_stats_of_uniform_samples(rng):
    result = stats(rng.random(1000))
    assert result.mu == pytest.approx(0.5, abs=0.02)
    assert result.sigma == pytest.approx(0.2887, abs=0.02)


def test_stats_of_empty_input():
    with pytest.raises(DimensionError):
        stats(np.array([]))


def test_gaussian_on_small_vector():
    out = modulate(Tensor([1.0, 2.0, 3.0]), GAUSSIAN).numpy()
    np.testing.assert_allclose(out, [np.exp(-0.75), 1.0, np.exp(-0.75)], atol=1e-5)
    np.testing.assert_allclose(out[0], 0.47237, atol=1e-5)


def test_gaussian_constant_input_gives_ones():
    out = modulate(Tensor(np.full((2, 3), 4.0)), GAUSSIAN).numpy()
    np.testing.assert_array_equal(out, 1.0)


def test_gaussian_constant_input_has_zero_gradient():
    x = Tensor(np.full((4,), 4.0), requires_grad=True)
    with Graph() as graph:
        graph.backward(modulate(x, GAUSSIAN))
    np.testing.assert_array_equal(x.grad, 0.0)


def test_gaussian_properties_on_random_vectors(rng):
    modulator = GaussianModulator(GAUSSIAN)
    for _ in range(1000):
        values = rng.normal(size=(1, 12)) * rng.uniform(0.5, 3.0)
        mu = values.mean(axis=1, keepdims=True)
        sigma = values.std(axis=1, keepdims=True)
        out, _ = modulator.apply(values, mu, sigma)
        mirrored, _ = modulator.apply(2 * mu - values, mu, sigma)
        shifted, _ = modulator.apply(values + 3.0, mu + 3.0, sigma)
        np.testing.assert_allclose(out, mirrored, atol=1e-12)
        np.testing.assert_allclose(out, shifted, atol=1e-12)
        order = np.argsort(np.abs(values - mu)[0])
        assert np.all(np.diff(out[0, order]) <= 1e-12)
        assert np.all((out > 0) & (out <= 1))


def test_per_sample_statistics():
    values = np.array([[1.0, 2.0, 3.0], [10.0, 20.0, 30.0]])
    out = modulate(Tensor(values), GAUSSIAN, per_sample=True).numpy()
    np.testing.assert_allclose(out[0], out[1], atol=1e-6)


def test_threshold_fixed():
    fn = ModulationFn(kind="threshold", threshold=0.5)
    np.testing.assert_array_equal(modulate(Tensor([0.2, 0.7]), fn).numpy(), [0.0, 1.0])


def test_threshold_adaptive_uses_mean():
    fn = ModulationFn(kind="threshold")
    np.testing.assert_array_equal(
        modulate(Tensor([1.0, 2.0, 6.0]), fn).numpy(), [0.0, 0.0, 1.0]
    )


def test_threshold_has_zero_gradient():
    x = Tensor([0.2, 0.7], requires_grad=True)
    with Graph() as graph:
        graph.backward(modulate(x, ModulationFn(kind="threshold", threshold=0.5)))
    np.testing.assert_array_equal(x.grad, 0.0)


def test_identity_returns_values():
    fn = ModulationFn(kind="identity")
    np.testing.assert_array_equal(modulate(Tensor([3.0, -1.0]), fn).numpy(), [3.0, -1.0])


def test_threshold_value_only_for_threshold_kind():
    with pytest.raises(ValidationError):
        ModulationFn(kind="gaussian", threshold=0.5)


def test_modulator_for_dispatches_on_kind():
    assert isinstance(modulator_for(GAUSSIAN), GaussianModulator)


@pytest.mark.parametrize("kind", ["gaussian", "identity", "threshold"])
def test_modulate_gradients_with_frozen_statistics(rng, kind):
    fn = ModulationFn(kind=kind)
    with FrozenStatistics() as frozen:
        report = check_gradients(
            lambda t: modulate(t["x"], fn, per_sample=True),
            {"x": rng.normal(size=(2, 6))},
            before_eval=frozen.rewind,
        )
    assert report.passed(), report.errors


def test_gaussian_gradient_formula():
    x = Tensor(np.array([1.0, 2.0, 4.0]), requires_grad=True)
    values = np.array([1.0, 2.0, 4.0])
    mu, variance = values.mean(), values.var()
    expected = np.exp(-((values - mu) ** 2) / (2 * variance)) * (-(values - mu) / variance)
    with Graph() as graph:
        graph.backward(modulate(x, GAUSSIAN))
    np.testing.assert_allclose(x.grad, expected, rtol=1e-5)
