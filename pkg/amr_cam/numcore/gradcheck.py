"""Verificación de gradientes por diferencias finitas centrales."""

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional

import numpy as np

from amr_cam.numcore.ops import elementwise, reduce_sum
from amr_cam.numcore.tensor import Graph, Tensor, no_grad, precision

Builder = Callable[[Dict[str, Tensor]], Tensor]

DEFAULT_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-3


@dataclass
class GradCheckReport:
    """Errores relativos por entrada."""

    errors: Dict[str, float]

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.max_error < tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / (||a|| + ||n||), con piso para gradientes nulos."""
    diff = float(np.linalg.norm(analytic - numeric))
    scale = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    return diff / max(scale, 1e-8)


def numerical_gradient(
    evaluate: Callable[[], float],
    values: np.ndarray,
    step: float = DEFAULT_STEP,
    before_eval: Optional[Callable[[], None]] = None,
) -> np.ndarray:
    """
    Gradiente de `evaluate` respecto a `values` por diferencias centrales.

    `values` se modifica en sitio durante el cálculo y se restaura al final.
    """
    grad = np.zeros(values.shape, dtype=np.float64)
    flat = values.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        if before_eval is not None:
            before_eval()
        upper = evaluate()
        flat[i] = original - step
        if before_eval is not None:
            before_eval()
        lower = evaluate()
        flat[i] = original
        grad.reshape(-1)[i] = (upper - lower) / (2.0 * step)
    return grad


def check_gradients(
    build: Builder,
    inputs: Mapping[str, np.ndarray],
    seed: int = 0,
    step: float = DEFAULT_STEP,
    before_eval: Optional[Callable[[], None]] = None,
) -> GradCheckReport:
    """
    Compara el gradiente analítico con el numérico en modo sombra de 64 bits.

    Las salidas no escalares se proyectan con pesos gaussianos fijos, de modo
    que se verifica el jacobiano completo y no solo la suma.

    Parameters:
        build: Recibe las hojas por nombre y devuelve la salida.
        inputs: Valores iniciales de cada hoja.
        seed: Semilla de los pesos de proyección.
        step: Paso de las diferencias finitas.
        before_eval: Gancho invocado antes de cada evaluación (incluida la
            analítica), por ejemplo para rebobinar estadísticas congeladas.
    """
    with precision(np.float64):
        leaves = {
            name: Tensor(np.array(value, dtype=np.float64), requires_grad=True)
            for name, value in inputs.items()
        }
        rng = np.random.default_rng(seed)
        projection: Dict[str, Tensor] = {}

        def scalar_output() -> Tensor:
            out = build(leaves)
            if out.size == 1:
                return out
            if "w" not in projection:
                projection["w"] = Tensor(rng.standard_normal(out.shape))
            return reduce_sum(elementwise(out, projection["w"], "mul"))

        if before_eval is not None:
            before_eval()
        with Graph() as graph:
            graph.backward(scalar_output())

        def evaluate() -> float:
            with no_grad():
                return scalar_output().item()

        errors = {}
        for name, leaf in leaves.items():
            analytic = leaf.grad if leaf.grad is not None else np.zeros(leaf.shape)
            numeric = numerical_gradient(evaluate, leaf.data, step, before_eval)
            errors[name] = relative_error(analytic, numeric)
    return GradCheckReport(errors=errors)
