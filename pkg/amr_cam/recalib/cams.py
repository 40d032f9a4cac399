"""
Pila de CAMs por muestra y recalibración ponderada.

M_W = xi * M_S + (1 - xi) * M_C, a resolución de CAM; la subida a resolución
de imagen es un paso aparte.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from amr_cam.helpers.images import resize_stack
from amr_cam.numcore import DimensionError
from amr_cam.numcore.tensor import Tensor
from amr_cam.recalib import CoefficientError


@dataclass
class CamStack:
    """
    Mapas de activación por clase de una muestra.

    Attributes:
        maps: Tensor (N, H, W).
        normalized: Si los valores ya están en [0, 1].
        class_mask: Booleano (N,) con las clases presentes.
    """

    maps: Tensor
    normalized: bool
    class_mask: np.ndarray

    def __post_init__(self) -> None:
        self.class_mask = np.asarray(self.class_mask).astype(bool)
        if self.maps.ndim != 3 or self.class_mask.shape != self.maps.shape[:1]:
            raise DimensionError(
                f"CamStack: mapas {self.maps.shape} y máscara {self.class_mask.shape}."
            )
        if self.normalized:
            data = self.maps.data
            if data.min() < 0.0 or data.max() > 1.0:
                raise ValueError("CamStack normalizada con valores fuera de [0, 1].")
            if np.any(data[~self.class_mask] != 0.0):
                raise ValueError("CamStack normalizada con clases ausentes no nulas.")

    @property
    def n_classes(self) -> int:
        return self.maps.shape[0]

    @property
    def size(self) -> Tuple[int, int]:
        return self.maps.shape[1], self.maps.shape[2]


def to_cam_stacks(cams: Tensor, labels: np.ndarray, normalized: bool) -> List[CamStack]:
    """Parte un tensor (B, N, H, W) en una CamStack por muestra (sin grafo)."""
    if cams.ndim != 4 or np.asarray(labels).shape != cams.shape[:2]:
        raise DimensionError(f"to_cam_stacks: cams {cams.shape}, etiquetas {labels.shape}.")
    return [
        CamStack(
            maps=Tensor(cams.data[b], dtype=cams.dtype),
            normalized=normalized,
            class_mask=np.asarray(labels[b]) > 0,
        )
        for b in range(cams.shape[0])
    ]


def recalibrate(cam_s: CamStack, cam_c: CamStack, xi: float) -> CamStack:
    """
    Combinación convexa de las CAMs spotlight y de compensación.

    Raises:
        CoefficientError: Si xi no está en [0, 1].
        DimensionError: Si las pilas no están normalizadas o no coinciden en
            forma o en clases presentes.
    """
    if not 0.0 <= xi <= 1.0:
        raise CoefficientError(f"xi debe estar en [0, 1], recibió {xi}.")
    if not (cam_s.normalized and cam_c.normalized):
        raise DimensionError("recalibrate requiere CAMs normalizadas.")
    if cam_s.maps.shape != cam_c.maps.shape:
        raise DimensionError(f"recalibrate: {cam_s.maps.shape} vs {cam_c.maps.shape}.")
    if not np.array_equal(cam_s.class_mask, cam_c.class_mask):
        raise DimensionError("recalibrate: las pilas tienen clases presentes distintas.")
    spotlight = cam_s.maps.data.astype(np.float64)
    compensation = cam_c.maps.data.astype(np.float64)
    weighted = np.clip(xi * spotlight + (1.0 - xi) * compensation, 0.0, 1.0)
    return CamStack(
        maps=Tensor(weighted, dtype=cam_s.maps.dtype),
        normalized=True,
        class_mask=cam_s.class_mask.copy(),
    )


def upsample(cam: CamStack, size: Tuple[int, int]) -> CamStack:
    """Subida bilineal a resolución de imagen; conserva rango y máscara."""
    values = resize_stack(cam.maps.data, size, "bilinear")
    if cam.normalized:
        values = np.clip(values, 0.0, 1.0)
    values[~cam.class_mask] = 0.0
    return CamStack(
        maps=Tensor(values, dtype=cam.maps.dtype),
        normalized=cam.normalized,
        class_mask=cam.class_mask.copy(),
    )
