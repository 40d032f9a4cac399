"""Aumentos de entrenamiento: volteo horizontal y escalado aleatorio."""

from dataclasses import replace
from typing import Tuple

import numpy as np

from amr_cam.data.synth import SampleBatch
from amr_cam.helpers.images import resize_labels, resize_stack


def hflip(values: np.ndarray) -> np.ndarray:
    """Voltea horizontalmente el último eje."""
    return np.ascontiguousarray(values[..., ::-1])


def fit_to_size(values: np.ndarray, size: int) -> np.ndarray:
    """Recorte central o relleno con ceros de los dos últimos ejes hasta size×size."""
    height, width = values.shape[-2:]
    out = values
    if height > size or width > size:
        top = max(0, (height - size) // 2)
        left = max(0, (width - size) // 2)
        out = out[..., top : top + size, left : left + size]
    height, width = out.shape[-2:]
    if height < size or width < size:
        pad_h, pad_w = size - height, size - width
        pads = [(0, 0)] * (out.ndim - 2) + [
            (pad_h // 2, pad_h - pad_h // 2),
            (pad_w // 2, pad_w - pad_w // 2),
        ]
        out = np.pad(out, pads)
    return np.ascontiguousarray(out)


def scale_jitter(
    image: np.ndarray, mask: np.ndarray, factor: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reescala imagen (bilineal) y máscara (nearest) y vuelve al tamaño original.

    Parameters:
        image: (3, S, S).
        mask: (S, S) de enteros.
        factor: Escala; el nuevo lado es round(S * factor).
    """
    size = image.shape[-1]
    side = max(1, int(round(size * factor)))
    if side == size:
        return image, mask
    scaled = np.clip(resize_stack(image, (side, side), "bilinear"), 0.0, 1.0)
    scaled_mask = resize_labels(mask, (side, side))
    return fit_to_size(scaled, size).astype(image.dtype), fit_to_size(scaled_mask, size)


class Augmenter:
    """Aplica volteo con probabilidad `flip_prob` y escala en `scale_range`."""

    def __init__(
        self, flip_prob: float = 0.5, scale_range: Tuple[float, float] = (0.75, 1.25)
    ):
        self.flip_prob = flip_prob
        self.scale_range = scale_range

    def __call__(self, batch: SampleBatch, rng: np.random.Generator) -> SampleBatch:
        images = batch.images.copy()
        masks = batch.masks.copy()
        for b in range(len(batch)):
            if rng.random() < self.flip_prob:
                images[b] = hflip(images[b])
                masks[b] = hflip(masks[b])
            factor = rng.uniform(*self.scale_range)
            images[b], masks[b] = scale_jitter(images[b], masks[b], factor)
        return replace(batch, images=images, masks=masks)
