"""Pseudo-etiquetas por argmax con umbral de fondo."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from amr_cam.helpers.images import save_pgm
from amr_cam.numcore import DimensionError
from amr_cam.recalib.cams import CamStack

BACKGROUND = 0


@dataclass
class PseudoLabel:
    """Mapa (H, W) de enteros: 0 es fondo y 1..N las clases."""

    labels: np.ndarray

    def to_pgm(self, path: Path) -> None:
        """Exporta el índice de clase de cada píxel como gris de 8 bits."""
        save_pgm(self.labels.astype(np.uint8), path)


def pseudo_label(cam: CamStack, bg_threshold: float) -> PseudoLabel:
    """
    Argmax por píxel si supera el umbral; fondo en otro caso.

    Solo compiten las clases de `class_mask`; los empates van a la clase de
    menor índice.
    """
    if not cam.normalized:
        raise DimensionError("pseudo_label requiere una CamStack normalizada.")
    present = np.asarray(cam.class_mask, dtype=bool)[:, None, None]
    values = np.where(present, cam.maps.data, -np.inf)
    best = np.argmax(values, axis=0)
    peak = np.take_along_axis(values, best[None], axis=0)[0]
    labels = np.where(peak > bg_threshold, best + 1, BACKGROUND)
    return PseudoLabel(labels=labels.astype(np.int64))
