"""Bucle de entrenamiento con SGD sobre L_all = L_cls + L_cps."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from amr_cam.data.augment import Augmenter
from amr_cam.data.synth import SampleBatch, SampleStream, generate
from amr_cam.harness import NonFiniteLossError
from amr_cam.harness.evaluate import evaluate
from amr_cam.helpers.logger import LoggerMixin
from amr_cam.models.schemas import EpochLoss, MetricsReport, RunConfig
from amr_cam.network.checkpoint import save_checkpoint
from amr_cam.network.losses import loss_total
from amr_cam.network.model import AmrModel, forward
from amr_cam.numcore import NonFiniteError
from amr_cam.numcore.optim import OptimState, sgd_step
from amr_cam.numcore.serialize import save_tensor
from amr_cam.numcore.tensor import Graph, Tensor

CHECKPOINT_NAME = "checkpoint.amr"
REPORT_NAME = "metrics.json"
LOSS_CURVE_NAME = "loss_curve.csv"


@dataclass
class StepLoss:
    """Pérdidas de un paso; `objective` es el valor que se derivó."""

    epoch: int
    step: int
    l_all: float
    l_cls: float
    l_cps: float
    objective: float


@dataclass
class TrainResult:
    model: AmrModel
    loss_curve: List[EpochLoss]
    steps: List[StepLoss] = field(default_factory=list)


@dataclass
class TrainOutcome:
    """Lo que deja `train`: modelo, checkpoint y reporte sobre validación."""

    model: AmrModel
    checkpoint: Optional[Path]
    report: MetricsReport


def poly_learning_rate(config: RunConfig, iteration: int, total: int) -> float:
    """lr * (1 - t / T) ** lr_power; con lr_power = 0 la tasa es constante."""
    if config.lr_power == 0 or total <= 0:
        return config.lr
    return config.lr * (1.0 - iteration / total) ** config.lr_power


class Trainer(LoggerMixin):
    """
    Entrena un AmrModel de forma determinista a partir de `config.seed`.

    Inicialización, orden de lotes y aumentos usan flujos aleatorios
    independientes derivados de la misma semilla.
    """

    def __init__(
        self,
        config: RunConfig,
        run_dir: Optional[Path] = None,
        logger: Optional[logging.Logger] = None,
    ):
        super().__init__(logger)
        self.config = config
        self.run_dir = run_dir
        init_seq, order_seq, augment_seq = np.random.SeedSequence(config.seed).spawn(3)
        self.init_rng = np.random.default_rng(init_seq)
        self.order_rng = np.random.default_rng(order_seq)
        self.augment_rng = np.random.default_rng(augment_seq)
        self.augmenter = Augmenter(
            flip_prob=config.flip_prob, scale_range=(config.scale_min, config.scale_max)
        )

    def build_model(self) -> AmrModel:
        model = AmrModel.build(self.config, self.init_rng)
        sizes = {name: int(np.prod(t.shape)) for name, t in model.parameters().items()}
        self.logger.info(
            "modelo con %d parámetros (%d del AMM)",
            sum(sizes.values()),
            sum(v for k, v in sizes.items() if k.startswith("amm.")),
        )
        return model

    def dump_batch(self, batch: SampleBatch) -> Optional[Path]:
        """Vuelca el lote problemático en formato TNSR."""
        if self.run_dir is None:
            return None
        target = self.run_dir / "nonfinite"
        target.mkdir(parents=True, exist_ok=True)
        save_tensor(batch.images, target / "images.tnsr")
        save_tensor(batch.labels, target / "labels.tnsr")
        save_tensor(batch.indices.astype(np.float32), target / "indices.tnsr")
        return target

    def step(
        self, model: AmrModel, batch: SampleBatch, epoch: int, index: int
    ) -> StepLoss:
        """Forward, backward y registro de un paso; no actualiza parámetros."""
        try:
            with Graph() as graph:
                out = forward(model, Tensor(batch.images), self.config.modulation)
                terms = loss_total(out, batch.labels, use_cps=self.config.use_cps)
                l_all, l_cls, l_cps = terms.values()
                graph.backward(terms.l_all)
        except NonFiniteError as error:
            raise self.non_finite(batch, epoch, index, error) from error
        return StepLoss(
            epoch=epoch, step=index, l_all=l_all, l_cls=l_cls, l_cps=l_cps, objective=l_all
        )

    def update(
        self,
        params: List[Tensor],
        state: OptimState,
        batch: SampleBatch,
        epoch: int,
        index: int,
    ) -> None:
        """Paso de SGD; un parámetro no finito se trata como una pérdida no finita."""
        try:
            sgd_step(params, state)
        except NonFiniteError as error:
            raise self.non_finite(batch, epoch, index, error) from error

    def non_finite(
        self, batch: SampleBatch, epoch: int, index: int, error: NonFiniteError
    ) -> NonFiniteLossError:
        """Vuelca el lote y arma el error que detiene el entrenamiento."""
        target = self.dump_batch(batch)
        self.logger.error(
            "valores no finitos en época %d paso %d; lote volcado en %s",
            epoch,
            index,
            target,
            exc_info=True,
        )
        return NonFiniteLossError(
            f"Valores no finitos en la época {epoch}, paso {index}: {error.message}"
        )

    def fit(self, train: SampleStream, model: Optional[AmrModel] = None) -> TrainResult:
        """Optimiza el modelo durante `config.epochs` épocas."""
        model = model or self.build_model()
        params = list(model.parameters().values())
        state = OptimState(
            learning_rate=self.config.lr,
            momentum=self.config.momentum,
            weight_decay=self.config.weight_decay,
        )
        steps_per_epoch = -(-len(train) // self.config.batch_size)
        total = steps_per_epoch * self.config.epochs
        curve: List[EpochLoss] = []
        history: List[StepLoss] = []
        iteration = 0
        for epoch in range(1, self.config.epochs + 1):
            epoch_steps: List[StepLoss] = []
            for index, batch in enumerate(
                train.batches(self.config.batch_size, self.order_rng)
            ):
                batch = self.augmenter(batch, self.augment_rng)
                record = self.step(model, batch, epoch, index)
                state.learning_rate = poly_learning_rate(self.config, iteration, total)
                self.update(params, state, batch, epoch, index)
                iteration += 1
                epoch_steps.append(record)
                self.logger.debug(
                    "época %d paso %d L_all=%.5f L_cls=%.5f L_cps=%.5f",
                    epoch,
                    index,
                    record.l_all,
                    record.l_cls,
                    record.l_cps,
                )
            summary = EpochLoss(
                epoch=epoch,
                l_all=float(np.mean([s.l_all for s in epoch_steps])),
                l_cls=float(np.mean([s.l_cls for s in epoch_steps])),
                l_cps=float(np.mean([s.l_cps for s in epoch_steps])),
                steps=len(epoch_steps),
            )
            self.logger.info(
                "época %d/%d L_all=%.5f L_cls=%.5f L_cps=%.5f",
                epoch,
                self.config.epochs,
                summary.l_all,
                summary.l_cls,
                summary.l_cps,
            )
            curve.append(summary)
            history.extend(epoch_steps)
        return TrainResult(model=model, loss_curve=curve, steps=history)


def write_loss_curve(curve: List[EpochLoss], path: Path) -> None:
    pd.DataFrame([c.model_dump() for c in curve]).to_csv(path, index=False)


def train(config: RunConfig, run_dir: Optional[Path] = None) -> TrainOutcome:
    """
    Genera los datos, entrena, guarda el checkpoint y evalúa en validación.

    Con `run_dir` se escriben el checkpoint, el reporte JSON y la curva de
    pérdidas.
    """
    train_split, val_split = generate(config.dataset)
    result = Trainer(config, run_dir).fit(train_split)
    report = evaluate(result.model, config, val_split, loss_curve=result.loss_curve)
    checkpoint = None
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        checkpoint = run_dir / CHECKPOINT_NAME
        save_checkpoint(result.model, config, checkpoint)
        (run_dir / REPORT_NAME).write_text(report.model_dump_json(indent=2), encoding="utf-8")
        write_loss_curve(result.loss_curve, run_dir / LOSS_CURVE_NAME)
    return TrainOutcome(model=result.model, checkpoint=checkpoint, report=report)
