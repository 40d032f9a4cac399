"""Descenso de gradiente estocástico con momento y decaimiento de pesos."""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from amr_cam.numcore import OptimizerStateError
from amr_cam.numcore.tensor import Tensor, check_finite


@dataclass
class OptimState:
    """
    Estado del optimizador.

    Attributes:
        learning_rate: Tasa de aprendizaje.
        momentum: Coeficiente de momento.
        weight_decay: Penalización L2 sumada al gradiente.
        buffers: Un buffer de velocidad por parámetro, en el orden de
            `sgd_step`. Se crean en el primer paso.
    """

    learning_rate: float
    momentum: float = 0.9
    weight_decay: float = 1e-4
    buffers: List[np.ndarray] = field(default_factory=list)


def sgd_step(params: Sequence[Tensor], state: OptimState) -> Sequence[Tensor]:
    """
    Aplica un paso in-place y limpia los gradientes.

    v <- momentum * v + grad + weight_decay * param
    param <- param - learning_rate * v

    Raises:
        OptimizerStateError: Si algún parámetro no tiene gradiente o los
            buffers no corresponden a los parámetros.
    """
    missing = [i for i, p in enumerate(params) if p.grad is None]
    if missing:
        raise OptimizerStateError(f"Parámetros sin gradiente en posiciones {missing}.")
    if not state.buffers:
        state.buffers = [np.zeros(p.shape, dtype=p.dtype) for p in params]
    if len(state.buffers) != len(params):
        raise OptimizerStateError(
            f"{len(state.buffers)} buffers para {len(params)} parámetros."
        )

    for index, (param, buffer) in enumerate(zip(params, state.buffers)):
        if buffer.shape != param.shape:
            raise OptimizerStateError(
                f"Buffer {buffer.shape} no coincide con parámetro {param.shape}."
            )
        assert param.grad is not None
        velocity = (
            state.momentum * buffer.astype(np.float64)
            + param.grad.astype(np.float64)
            + state.weight_decay * param.data.astype(np.float64)
        )
        updated = param.data.astype(np.float64) - state.learning_rate * velocity
        check_finite(updated, f"sgd_step[{index}]")
        buffer[...] = velocity
        param.data[...] = updated
        param.grad = None
    return params
