"""Tests para la recalibración de CAMs."""

import numpy as np
import pytest

from amr_cam.numcore import DimensionError
from amr_cam.numcore.tensor import Tensor
from amr_cam.recalib import CoefficientError
from amr_cam.recalib.cams import CamStack, recalibrate, to_cam_stacks, upsample


def _stack(values, mask=None, normalized=True) -> CamStack:
    maps = np.asarray(values, dtype=np.float64)
    if mask is None:
        mask = np.ones(maps.shape[0], dtype=bool)
    return CamStack(maps=Tensor(maps), normalized=normalized, class_mask=mask)


@pytest.fixture(name="pair")
def pair_fixture(rng):
    mask = np.array([True, False, True])
    spotlight = rng.random((3, 4, 4)) * mask[:, None, None]
    compensation = rng.random((3, 4, 4)) * mask[:, None, None]
    return _stack(spotlight, mask), _stack(compensation, mask)


def test_convex_combination_at_a_pixel():
    weighted = recalibrate(_stack([[[0.8]]]), _stack([[[0.2]]]), 0.5)
    assert weighted.maps.item() == pytest.approx(0.5)


def test_endpoints_are_exact(pair):
    cam_s, cam_c = pair
    spotlight_only = recalibrate(cam_s, cam_c, 1.0).maps.numpy()
    compensation_only = recalibrate(cam_s, cam_c, 0.0).maps.numpy()
    assert spotlight_only.tobytes() == cam_s.maps.numpy().tobytes()
    assert compensation_only.tobytes() == cam_c.maps.numpy().tobytes()


def test_result_keeps_range_and_mask(pair):
    cam_s, cam_c = pair
    weighted = recalibrate(cam_s, cam_c, 0.3)
    assert weighted.normalized
    assert 0.0 <= weighted.maps.data.min() and weighted.maps.data.max() <= 1.0
    np.testing.assert_array_equal(weighted.maps.data[1], 0.0)
    np.testing.assert_array_equal(weighted.class_mask, cam_s.class_mask)


@pytest.mark.parametrize("xi", [-0.1, 1.5])
def test_coefficient_out_of_range(pair, xi):
    with pytest.raises(CoefficientError):
        recalibrate(*pair, xi)


def test_mismatched_shapes(pair):
    with pytest.raises(DimensionError):
        recalibrate(pair[0], _stack(np.zeros((3, 2, 2))), 0.5)


def test_mismatched_masks(pair):
    other = _stack(np.zeros((3, 4, 4)), np.array([True, True, False]))
    with pytest.raises(DimensionError):
        recalibrate(pair[0], other, 0.5)


def test_requires_normalized_stacks(pair):
    raw = _stack(np.full((3, 4, 4), 2.0), normalized=False)
    with pytest.raises(DimensionError):
        recalibrate(pair[0], raw, 0.5)


def test_normalized_stack_validates_values():
    with pytest.raises(ValueError):
        _stack(np.full((1, 2, 2), 1.5))
    with pytest.raises(ValueError):
        _stack(np.full((2, 2, 2), 0.5), np.array([True, False]))


def test_stack_shape_validation():
    with pytest.raises(DimensionError):
        _stack(np.zeros((2, 2)))


def test_to_cam_stacks_splits_the_batch(rng):
    cams = Tensor(rng.random((2, 3, 4, 4)))
    labels = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    stacks = to_cam_stacks(cams, labels, normalized=False)
    assert len(stacks) == 2
    np.testing.assert_array_equal(stacks[1].class_mask, [False, True, False])
    assert stacks[0].size == (4, 4)
    assert stacks[0].n_classes == 3


def test_upsample_to_image_resolution(pair):
    big = upsample(pair[0], (32, 32))
    assert big.size == (32, 32)
    assert big.normalized
    assert big.maps.data.max() <= 1.0
    np.testing.assert_array_equal(big.maps.data[1], 0.0)


def test_upsample_constant_map_stays_constant():
    big = upsample(_stack(np.full((1, 4, 4), 0.6)), (16, 16))
    np.testing.assert_allclose(big.maps.data, 0.6, atol=1e-6)
