"""Lectura y escritura de PGM/PPM y remuestreo de mapas con Pillow."""

from pathlib import Path
from typing import Literal, Tuple

import numpy as np
from PIL import Image

Resample = Literal["bilinear", "nearest"]

_FILTERS = {
    "bilinear": Image.Resampling.BILINEAR,
    "nearest": Image.Resampling.NEAREST,
}


def quantize(values: np.ndarray) -> np.ndarray:
    """Lleva valores en [0, 1] a grises de 8 bits: round(v * 255)."""
    return np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def resize_map(values: np.ndarray, size: Tuple[int, int], mode: Resample) -> np.ndarray:
    """
    Remuestrea un mapa 2-d de reales a (alto, ancho).

    Bilinear usa centros de píxel; nearest conserva los valores originales.
    """
    height, width = size
    image = Image.fromarray(np.ascontiguousarray(values, dtype=np.float32))
    resized = image.resize((width, height), resample=_FILTERS[mode])
    return np.asarray(resized, dtype=np.float32)


def resize_labels(labels: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Remuestreo nearest de un mapa de clases enteras (0..255)."""
    height, width = size
    image = Image.fromarray(np.ascontiguousarray(labels, dtype=np.uint8))
    resized = image.resize((width, height), resample=Image.Resampling.NEAREST)
    return np.asarray(resized, dtype=labels.dtype)


def resize_stack(stack: np.ndarray, size: Tuple[int, int], mode: Resample) -> np.ndarray:
    """Remuestrea cada mapa de un arreglo (K, H, W)."""
    return np.stack([resize_map(plane, size, mode) for plane in stack])


def save_pgm(values: np.ndarray, path: Path) -> None:
    """Guarda un arreglo (H, W) uint8 como PGM binario."""
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.ascontiguousarray(values, dtype=np.uint8)
    Image.fromarray(pixels).save(path, format="PPM")


def save_ppm(values: np.ndarray, path: Path) -> None:
    """Guarda un arreglo (H, W, 3) uint8 como PPM binario."""
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.ascontiguousarray(values, dtype=np.uint8)
    Image.fromarray(pixels).save(path, format="PPM")


def load_pgm(path: Path) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("L"), dtype=np.uint8).copy()


def load_ppm(path: Path) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()


def to_rgb8(image: np.ndarray) -> np.ndarray:
    """(3, H, W) en [0, 1] -> (H, W, 3) uint8."""
    return quantize(np.transpose(image, (1, 2, 0)))


def from_rgb8(pixels: np.ndarray) -> np.ndarray:
    """(H, W, 3) uint8 -> (3, H, W) float32 en [0, 1]."""
    return (np.transpose(pixels, (2, 0, 1)).astype(np.float32) / 255.0).astype(np.float32)
