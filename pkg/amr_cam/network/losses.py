"""Pérdidas de clasificación y de supervisión cruzada entre ramas."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from amr_cam.network.model import ForwardOut, normalize_cam
from amr_cam.numcore import DimensionError
from amr_cam.numcore.ops import elementwise, reduce_mean, reduce_sum, scale, soft_margin
from amr_cam.numcore.tensor import Tensor


@dataclass
class LossTerms:
    """L_all = L_cls + L_cps, las tres del mismo forward."""

    l_all: Tensor
    l_cls: Tensor
    l_cps: Tensor

    def values(self) -> Tuple[float, float, float]:
        return self.l_all.item(), self.l_cls.item(), self.l_cps.item()


def loss_cls(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Soft margin multi-etiqueta: media sobre clases y luego sobre el lote."""
    targets = np.asarray(labels, dtype=np.float64)
    if targets.shape != logits.shape:
        raise DimensionError(f"loss_cls: logits {logits.shape} y etiquetas {targets.shape}.")
    return reduce_mean(soft_margin(logits, targets))


def loss_cps(cam_s: Tensor, cam_c: Tensor, labels: np.ndarray) -> Tensor:
    """
    L1 medio entre CAMs normalizadas de ambas ramas.

    Solo cuentan los mapas de clases presentes; el gradiente llega a las dos
    ramas. Sin clases presentes la pérdida es 0.
    """
    if cam_s.shape != cam_c.shape:
        raise DimensionError(f"loss_cps: cams {cam_s.shape} y {cam_c.shape}.")
    present = int((np.asarray(labels) > 0).sum())
    if present == 0:
        return Tensor(0.0, dtype=cam_s.dtype)
    height, width = cam_s.shape[2:]
    difference = elementwise(
        normalize_cam(cam_s, labels) - normalize_cam(cam_c, labels), op="abs"
    )
    return scale(reduce_sum(difference), 1.0 / (present * height * width))


def loss_total(out: ForwardOut, labels: np.ndarray, use_cps: bool = True) -> LossTerms:
    """
    L_cls = (L_s + L_c) / 2, L_cps opcional y L_all = L_cls + L_cps.

    Con `use_cps=False` el término L_cps es la constante 0 y no aporta
    gradiente.
    """
    l_cls = scale(loss_cls(out.logits_s, labels) + loss_cls(out.logits_c, labels), 0.5)
    if use_cps:
        l_cps = loss_cps(out.cam_s, out.cam_c, labels)
    else:
        l_cps = Tensor(0.0, dtype=l_cls.dtype)
    return LossTerms(l_all=l_cls + l_cps, l_cls=l_cls, l_cps=l_cps)
