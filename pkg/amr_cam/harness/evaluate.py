"""
Evaluación de pseudo-etiquetas contra las máscaras de referencia.

Las CAMs de ambas ramas se normalizan con las etiquetas de imagen, se
recalibran, se suben a resolución de imagen y se convierten en
pseudo-etiquetas para cada tipo de CAM.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from amr_cam.data.augment import hflip
from amr_cam.data.synth import SampleBatch, SampleStream, generate_split
from amr_cam.harness import ConfigError
from amr_cam.harness.metrics import MetricsAccumulator
from amr_cam.helpers.logger import LoggerMixin
from amr_cam.models.schemas import CAM_KINDS, EpochLoss, MetricsReport, RunConfig
from amr_cam.network.checkpoint import load_checkpoint
from amr_cam.network.model import AmrModel, forward, normalize_cam
from amr_cam.numcore.tensor import Tensor, no_grad
from amr_cam.recalib.cams import CamStack, recalibrate, to_cam_stacks, upsample
from amr_cam.recalib.labels import pseudo_label

Setting = Tuple[float, float]


class Evaluator(LoggerMixin):
    """Calcula las CAMs una vez por lote y las puntúa en varios (xi, umbral)."""

    def __init__(
        self, model: AmrModel, config: RunConfig, logger: Optional[logging.Logger] = None
    ):
        super().__init__(logger)
        self.model = model
        self.config = config

    def raw_cams(self, images: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """CAMs crudas (B, N, h, w) de ambas ramas, con volteo promediado si aplica."""
        with no_grad():
            out = forward(self.model, Tensor(images), self.config.modulation)
            cam_s, cam_c = out.cam_s.numpy(), out.cam_c.numpy()
            if self.config.flip_eval:
                flipped = forward(self.model, Tensor(hflip(images)), self.config.modulation)
                cam_s = 0.5 * (cam_s + hflip(flipped.cam_s.data))
                cam_c = 0.5 * (cam_c + hflip(flipped.cam_c.data))
        return cam_s, cam_c

    def cam_stacks(self, batch: SampleBatch) -> Tuple[List[CamStack], List[CamStack]]:
        """CamStacks normalizadas por muestra de las ramas spotlight y compensación."""
        cam_s, cam_c = self.raw_cams(batch.images)
        with no_grad():
            norm_s = normalize_cam(Tensor(cam_s), batch.labels)
            norm_c = normalize_cam(Tensor(cam_c), batch.labels)
        return (
            to_cam_stacks(norm_s, batch.labels, normalized=True),
            to_cam_stacks(norm_c, batch.labels, normalized=True),
        )

    def variants(
        self, cam_s: CamStack, cam_c: CamStack, xi: float, size: Tuple[int, int]
    ) -> Dict[str, CamStack]:
        """Los tres tipos de CAM a resolución de imagen."""
        weighted = recalibrate(cam_s, cam_c, xi)
        return {
            "spotlight": upsample(cam_s, size),
            "compensation": upsample(cam_c, size),
            "weighted": upsample(weighted, size),
        }

    def score(
        self, stream: SampleStream, settings: Sequence[Setting]
    ) -> List[MetricsReport]:
        """
        Un reporte por cada par (xi, umbral de fondo).

        Raises:
            ConfigError: Si la partición y el modelo no tienen las mismas clases.
        """
        if stream.n_classes != self.model.n_classes:
            raise ConfigError(
                f"La partición tiene {stream.n_classes} clases y el modelo "
                f"{self.model.n_classes}."
            )
        accumulators = [
            {kind: MetricsAccumulator(stream.n_classes) for kind in CAM_KINDS}
            for _ in settings
        ]
        size = (stream.images.shape[2], stream.images.shape[3])
        for batch in stream.batches(self.config.batch_size):
            stacks_s, stacks_c = self.cam_stacks(batch)
            for b, (cam_s, cam_c) in enumerate(zip(stacks_s, stacks_c)):
                truth = batch.masks[b]
                for (xi, threshold), accumulator in zip(settings, accumulators):
                    for kind, cam in self.variants(cam_s, cam_c, xi, size).items():
                        label = pseudo_label(cam, threshold)
                        accumulator[kind].add_labels(label.labels, truth)
                        accumulator[kind].add_regions(
                            cam.maps.data, cam.class_mask, truth, threshold
                        )
        reports = []
        for (xi, threshold), accumulator in zip(settings, accumulators):
            report = MetricsReport(
                split=stream.split,
                xi=xi,
                bg_threshold=threshold,
                variants={kind: acc.result() for kind, acc in accumulator.items()},
            )
            self.logger.info(
                "%s xi=%.2f umbral=%.2f mIoU spotlight=%.4f "
                "compensación=%.4f ponderada=%.4f",
                stream.split,
                xi,
                threshold,
                report.variants["spotlight"].miou,
                report.variants["compensation"].miou,
                report.variants["weighted"].miou,
            )
            reports.append(report)
        return reports


def evaluate(
    model: AmrModel,
    config: RunConfig,
    stream: SampleStream,
    xi: Optional[float] = None,
    bg_threshold: Optional[float] = None,
    loss_curve: Sequence[EpochLoss] = (),
) -> MetricsReport:
    """Evalúa un modelo en una partición; xi y umbral por defecto los de `config`."""
    setting = (
        config.xi if xi is None else xi,
        config.bg_threshold if bg_threshold is None else bg_threshold,
    )
    report = Evaluator(model, config).score(stream, [setting])[0]
    return report.model_copy(update={"loss_curve": list(loss_curve)})


def load_split(config: RunConfig, split: str) -> SampleStream:
    """Partición `train` o `val` del conjunto de la configuración."""
    if split not in ("train", "val"):
        raise ConfigError(f"Partición desconocida: {split}.")
    return generate_split(config.dataset, "train" if split == "train" else "val")


def evaluate_checkpoint(
    path: Path,
    split: str = "val",
    xi: Optional[float] = None,
    bg_threshold: Optional[float] = None,
    config: Optional[RunConfig] = None,
) -> MetricsReport:
    """
    Evalúa un checkpoint.

    Parameters:
        path: Archivo de checkpoint.
        split: Partición a evaluar.
        xi: Coeficiente de recalibración; por defecto el del checkpoint.
        bg_threshold: Umbral de fondo; por defecto el del checkpoint.
        config: Configuración que reemplaza a la guardada (por ejemplo con
            flip_eval activo); debe describir la misma arquitectura.
    """
    model, stored = load_checkpoint(path)
    effective = stored if config is None else config
    if effective.dataset.n_classes != model.n_classes:
        raise ConfigError(
            f"La configuración pide {effective.dataset.n_classes} clases y el "
            f"checkpoint tiene {model.n_classes}."
        )
    return evaluate(model, effective, load_split(effective, split), xi, bg_threshold)
