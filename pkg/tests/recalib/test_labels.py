"""Tests para las pseudo-etiquetas."""

import numpy as np
import pytest

from amr_cam.helpers.images import load_pgm
from amr_cam.numcore import DimensionError
from amr_cam.numcore.tensor import Tensor
from amr_cam.recalib.cams import CamStack
from amr_cam.recalib.labels import BACKGROUND, pseudo_label


def _stack(values, normalized=True) -> CamStack:
    maps = np.asarray(values, dtype=np.float64)
    mask = maps.reshape(maps.shape[0], -1).max(axis=1) > 0
    return CamStack(maps=Tensor(maps), normalized=normalized, class_mask=mask)


def test_all_zero_maps_are_background():
    label = pseudo_label(_stack(np.zeros((3, 4, 4))), 0.25)
    np.testing.assert_array_equal(label.labels, BACKGROUND)


def test_single_pixel_is_labeled():
    maps = np.zeros((2, 4, 4))
    maps[1, 2, 3] = 1.0
    label = pseudo_label(_stack(maps), 0.25)
    expected = np.zeros((4, 4), dtype=np.int64)
    expected[2, 3] = 2
    np.testing.assert_array_equal(label.labels, expected)


def test_tie_goes_to_lower_class():
    maps = np.full((3, 1, 1), 0.7)
    assert pseudo_label(_stack(maps), 0.25).labels[0, 0] == 1


def test_threshold_is_strict():
    assert pseudo_label(_stack(np.full((1, 1, 1), 0.25)), 0.25).labels[0, 0] == 0


def test_argmax_over_classes():
    maps = np.stack([np.array([[0.9, 0.3]]), np.array([[0.4, 0.8]])])
    np.testing.assert_array_equal(pseudo_label(_stack(maps), 0.25).labels, [[1, 2]])


def test_requires_normalized_stack():
    with pytest.raises(DimensionError):
        pseudo_label(_stack(np.full((1, 2, 2), 3.0), normalized=False), 0.25)


def test_export_as_pgm(tmp_path):
    maps = np.zeros((2, 3, 3))
    maps[1, 0, 0] = 1.0
    label = pseudo_label(_stack(maps), 0.25)
    label.to_pgm(tmp_path / "label.pgm")
    np.testing.assert_array_equal(load_pgm(tmp_path / "label.pgm"), label.labels)


def test_negative_threshold_never_labels_absent_class():
    stack = CamStack(
        maps=Tensor(np.zeros((3, 2, 2))),
        normalized=True,
        class_mask=np.array([False, False, True]),
    )
    np.testing.assert_array_equal(pseudo_label(stack, -0.1).labels, [[3, 3], [3, 3]])


def test_no_present_class_is_all_background():
    stack = CamStack(
        maps=Tensor(np.zeros((2, 3, 3))), normalized=True, class_mask=np.zeros(2, bool)
    )
    np.testing.assert_array_equal(pseudo_label(stack, -1.0).labels, BACKGROUND)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("threshold", [-0.5, 0.0, 0.25, 0.9])
def test_labels_belong_to_class_mask(seed, threshold):
    rng = np.random.default_rng(seed)
    mask = rng.random(4) < 0.5
    stack = CamStack(
        maps=Tensor(rng.random((4, 5, 5)) * mask[:, None, None]),
        normalized=True,
        class_mask=mask,
    )
    labels = pseudo_label(stack, threshold).labels
    allowed = {BACKGROUND, *(np.flatnonzero(mask) + 1).tolist()}
    assert set(np.unique(labels).tolist()) <= allowed
