"""Matriz de confusión, IoU por clase y cobertura de las regiones de CAM."""

from typing import List, Optional

import numpy as np

from amr_cam.models.schemas import VariantMetrics
from amr_cam.numcore import DimensionError


def confusion_matrix(
    prediction: np.ndarray, truth: np.ndarray, n_labels: int
) -> np.ndarray:
    """
    Matriz (n_labels, n_labels): filas verdad, columnas predicción.

    Las etiquetas van de 0 (fondo) a n_labels - 1.
    """
    if prediction.shape != truth.shape:
        raise DimensionError(f"predicción {prediction.shape} y verdad {truth.shape}.")
    pred = prediction.astype(np.int64).reshape(-1)
    true = truth.astype(np.int64).reshape(-1)
    labels = np.concatenate([pred, true])
    if labels.size and (labels.min() < 0 or labels.max() >= n_labels):
        raise DimensionError(f"Etiquetas fuera de [0, {n_labels}).")
    counts = np.bincount(true * n_labels + pred, minlength=n_labels * n_labels)
    return counts.reshape(n_labels, n_labels)


def class_iou(confusion: np.ndarray) -> List[Optional[float]]:
    """
    IoU por etiqueta; None para las clases que no aparecen en la verdad.

    El fondo (índice 0) se reporta siempre que su unión no sea vacía.
    """
    intersection = np.diag(confusion).astype(np.float64)
    truth_count = confusion.sum(axis=1)
    union = truth_count + confusion.sum(axis=0) - intersection
    values: List[Optional[float]] = []
    for label in range(confusion.shape[0]):
        counted = truth_count[label] > 0 or (label == 0 and union[label] > 0)
        values.append(float(intersection[label] / union[label]) if counted else None)
    return values


def mean_iou(confusion: np.ndarray) -> float:
    """Media sin pesos sobre las clases presentes en la verdad más el fondo."""
    values = [v for v in class_iou(confusion) if v is not None]
    return float(np.mean(values)) if values else 0.0


class MetricsAccumulator:
    """Acumula confusión y cobertura de regiones de un tipo de CAM."""

    def __init__(self, n_classes: int):
        self.n_classes = n_classes
        self.confusion = np.zeros((n_classes + 1, n_classes + 1), dtype=np.int64)
        self.true_positive = 0
        self.false_positive = 0
        self.false_negative = 0

    def add_labels(self, prediction: np.ndarray, truth: np.ndarray) -> None:
        self.confusion += confusion_matrix(prediction, truth, self.n_classes + 1)

    def add_regions(
        self, maps: np.ndarray, class_mask: np.ndarray, truth: np.ndarray, threshold: float
    ) -> None:
        """
        Compara la región `mapa > umbral` de cada clase presente con su máscara.

        Parameters:
            maps: CAMs normalizadas (N, H, W) a resolución de imagen.
            class_mask: Clases presentes (N,).
            truth: Máscara de referencia (H, W).
            threshold: Umbral de fondo.
        """
        for n in np.flatnonzero(class_mask):
            region = maps[n] > threshold
            target = truth == n + 1
            self.true_positive += int(np.sum(region & target))
            self.false_positive += int(np.sum(region & ~target))
            self.false_negative += int(np.sum(~region & target))

    def result(self) -> VariantMetrics:
        detected = self.true_positive + self.false_positive
        relevant = self.true_positive + self.false_negative
        return VariantMetrics(
            iou=class_iou(self.confusion),
            miou=mean_iou(self.confusion),
            precision=self.true_positive / detected if detected else 0.0,
            recall=self.true_positive / relevant if relevant else 0.0,
        )
