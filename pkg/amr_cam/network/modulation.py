"""
Funciones de modulación que redistribuyen la importancia de las activaciones.

La gaussiana lleva cada valor a exp(-(v - mu)^2 / (2 sigma^2)), con mu y sigma
calculados sobre el propio mapa y tratados como constantes en el backward.
"""

import threading
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np

from amr_cam.models.schemas import ActivationStats, ModulationFn, ModulationKind
from amr_cam.numcore import DimensionError
from amr_cam.numcore.tensor import Tensor, from_op


class _FrozenState(threading.local):
    def __init__(self) -> None:
        self.active: Optional["FrozenStatistics"] = None


_FROZEN = _FrozenState()


class FrozenStatistics:
    """
    Congela mu y sigma entre evaluaciones sucesivas de la misma red.

    La primera pasada registra las estadísticas de cada llamada a `modulate`;
    después de `rewind()` las pasadas reutilizan esos valores en el mismo
    orden. Las diferencias finitas necesitan esto para comparar contra el
    gradiente con estadísticas separadas.
    """

    def __init__(self) -> None:
        self._saved: List[Tuple[np.ndarray, np.ndarray]] = []
        self._cursor = 0
        self._recording = True
        self._previous: Optional["FrozenStatistics"] = None

    def __enter__(self) -> "FrozenStatistics":
        self._previous = _FROZEN.active
        _FROZEN.active = self
        return self

    def __exit__(self, *exc: object) -> None:
        _FROZEN.active = self._previous

    def rewind(self) -> None:
        if self._saved:
            self._recording = False
        self._cursor = 0

    def resolve(
        self, mu: np.ndarray, sigma: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        if self._recording:
            self._saved.append((mu, sigma))
            return mu, sigma
        saved = self._saved[self._cursor]
        self._cursor += 1
        return saved


def _map_statistics(flat: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mu = flat.mean(axis=1, keepdims=True)
    sigma = np.sqrt(np.mean((flat - mu) ** 2, axis=1, keepdims=True))
    if _FROZEN.active is not None:
        return _FROZEN.active.resolve(mu, sigma)
    return mu, sigma


def stats(values: Union[Tensor, np.ndarray]) -> ActivationStats:
    """
    Media y desviación estándar poblacional de todos los elementos.

    Raises:
        DimensionError: Si no hay elementos.
    """
    data = values.data if isinstance(values, Tensor) else np.asarray(values)
    if data.size == 0:
        raise DimensionError("stats requiere al menos un elemento.")
    flat = data.astype(np.float64).reshape(1, -1)
    mu = flat.mean()
    sigma = float(np.sqrt(np.mean((flat - mu) ** 2)))
    return ActivationStats(mu=float(mu), sigma=sigma, count=int(flat.size))


class Modulator(ABC):
    """Clase abstracta para las estrategias de modulación."""

    def __init__(self, fn: ModulationFn):
        self.fn = fn

    @abstractmethod
    def apply(
        self, flat: np.ndarray, mu: np.ndarray, sigma: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Modula mapas aplanados.

        Args:
            flat: Valores (mapas, M) en float64.
            mu: Media por mapa (mapas, 1).
            sigma: Desviación por mapa (mapas, 1).

        Returns:
            Valores modulados y derivada local por elemento.
        """


class GaussianModulator(Modulator):
    """Resalta los valores cercanos a la media y suprime los extremos."""

    def apply(
        self, flat: np.ndarray, mu: np.ndarray, sigma: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        flat_map = sigma < self.fn.epsilon
        variance = np.where(flat_map, 1.0, sigma**2)
        centered = flat - mu
        out = np.exp(-(centered**2) / (2.0 * variance))
        slope = out * (-centered / variance)
        out = np.where(flat_map, 1.0, out)
        slope = np.where(flat_map, 0.0, slope)
        return out, slope


class ThresholdModulator(Modulator):
    """Lleva a 1 lo que supera el umbral y a 0 el resto; sin gradiente."""

    def apply(
        self, flat: np.ndarray, mu: np.ndarray, sigma: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        threshold = mu if self.fn.threshold is None else self.fn.threshold
        out = (flat > threshold).astype(np.float64)
        return out, np.zeros_like(flat)


class IdentityModulator(Modulator):
    def apply(
        self, flat: np.ndarray, mu: np.ndarray, sigma: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        return flat, np.ones_like(flat)


MODULATORS: Dict[ModulationKind, Type[Modulator]] = {
    "gaussian": GaussianModulator,
    "threshold": ThresholdModulator,
    "identity": IdentityModulator,
}


def modulator_for(fn: ModulationFn) -> Modulator:
    """Instancia la estrategia correspondiente a `fn.kind`."""
    return MODULATORS[fn.kind](fn)


def modulate(values: Tensor, fn: ModulationFn, per_sample: bool = False) -> Tensor:
    """
    Aplica la función de modulación.

    Parameters:
        values: Mapa(s) de activación.
        fn: Función elegida.
        per_sample: Si es True el eje 0 indexa mapas independientes y las
            estadísticas se calculan sobre el resto de ejes de cada uno; si no,
            todo el tensor es un único mapa.
    """
    rows = values.shape[0] if per_sample and values.ndim > 1 else 1
    dtype = values.dtype
    flat = values.data.astype(np.float64).reshape(rows, -1)
    mu, sigma = _map_statistics(flat)
    out, slope = modulator_for(fn).apply(flat, mu, sigma)
    shape = values.shape

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        local = grad.astype(np.float64).reshape(rows, -1) * slope
        return (local.reshape(shape).astype(dtype),)

    return from_op(
        f"modulate[{fn.kind}]", out.reshape(shape).astype(dtype), (values,), vjp
    )
