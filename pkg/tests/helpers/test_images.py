"""Tests para la E/S de imágenes y el remuestreo."""

import numpy as np
import pytest

from amr_cam.helpers.images import (
    from_rgb8,
    load_pgm,
    load_ppm,
    quantize,
    resize_labels,
    resize_map,
    save_pgm,
    save_ppm,
    to_rgb8,
)


def test_quantize_maps_unit_interval_to_bytes():
    np.testing.assert_array_equal(quantize(np.array([0.0, 0.5, 1.0, 1.7, -1.0])), [0, 128, 255, 255, 0])


def test_pgm_round_trip(tmp_path, rng):
    values = rng.integers(0, 256, size=(5, 7)).astype(np.uint8)
    save_pgm(values, tmp_path / "nested" / "map.pgm")
    np.testing.assert_array_equal(load_pgm(tmp_path / "nested" / "map.pgm"), values)
    assert (tmp_path / "nested" / "map.pgm").read_bytes().startswith(b"P5")


def test_ppm_round_trip(tmp_path, rng):
    values = rng.integers(0, 256, size=(4, 6, 3)).astype(np.uint8)
    save_ppm(values, tmp_path / "image.ppm")
    np.testing.assert_array_equal(load_ppm(tmp_path / "image.ppm"), values)
    assert (tmp_path / "image.ppm").read_bytes().startswith(b"P6")


def test_rgb8_conversion(rng):
    image = rng.random((3, 4, 4)).astype(np.float32)
    pixels = to_rgb8(image)
    assert pixels.shape == (4, 4, 3)
    np.testing.assert_allclose(from_rgb8(pixels), image, atol=0.5 / 255 + 1e-6)


@pytest.mark.parametrize("mode", ["bilinear", "nearest"])
def test_resize_map_shape(mode, rng):
    assert resize_map(rng.random((4, 6)), (8, 12), mode).shape == (8, 12)


def test_resize_nearest_keeps_values():
    values = np.array([[0.0, 1.0], [2.0, 3.0]])
    out = resize_map(values, (4, 4), "nearest")
    assert set(np.unique(out)) == {0.0, 1.0, 2.0, 3.0}


def test_resize_labels_keeps_dtype_and_classes():
    labels = np.zeros((8, 8), dtype=np.uint8)
    labels[2:6, 2:6] = 3
    out = resize_labels(labels, (16, 16))
    assert out.dtype == np.uint8
    assert set(np.unique(out)) == {0, 3}
