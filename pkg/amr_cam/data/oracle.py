"""
Clasificador oráculo que solo mira las firmas.

Cuenta los píxeles cercanos al color brillante de cada clase; una clase está
presente si hay suficientes. Demuestra que la firma basta para clasificar.
"""

from typing import Dict

import numpy as np

from amr_cam.data.synth import PALETTE, SampleStream

COLOR_RADIUS = 0.3
MIN_PIXELS = 6


def oracle_labels(images: np.ndarray, n_classes: int) -> np.ndarray:
    """Multi-hot (B, N) predicho por coincidencia de color de firma."""
    pixels = np.transpose(images, (0, 2, 3, 1)).astype(np.float64)
    predicted = np.zeros((images.shape[0], n_classes), dtype=np.float32)
    for n in range(n_classes):
        distance = np.linalg.norm(pixels - PALETTE[n], axis=-1)
        hits = (distance < COLOR_RADIUS).sum(axis=(1, 2))
        predicted[:, n] = hits >= MIN_PIXELS
    return predicted


def oracle_accuracy(stream: SampleStream) -> Dict[str, float]:
    """Exactitud por etiqueta y por imagen completa del oráculo."""
    predicted = oracle_labels(stream.images, stream.n_classes)
    truth = stream.labels > 0
    correct = (predicted > 0) == truth
    return {
        "label_accuracy": float(correct.mean()),
        "exact_match": float(correct.all(axis=1).mean()),
    }
