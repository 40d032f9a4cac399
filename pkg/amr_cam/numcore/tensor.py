"""Tensor, grafo de ejecución y contextos de precisión."""

import contextlib
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import DTypeLike

from amr_cam.numcore import DimensionError, GraphStateError, NonFiniteError

VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class _State(threading.local):
    """Estado por hilo: dtype de almacenamiento, gradientes y grafo activo."""

    def __init__(self) -> None:
        self.dtype = np.dtype(np.float32)
        self.grad_enabled = True
        self.graph: Optional["Graph"] = None
        self.default_graph: Optional["Graph"] = None


_STATE = _State()


def default_dtype() -> np.dtype:
    """Dtype con el que se almacenan los tensores nuevos."""
    return _STATE.dtype


@contextlib.contextmanager
def precision(dtype: DTypeLike) -> Iterator[None]:
    """
    Cambia temporalmente el dtype de almacenamiento.

    El modo sombra de 64 bits de las pruebas de gradiente usa
    `precision(np.float64)` sobre exactamente el mismo código.
    """
    previous = _STATE.dtype
    _STATE.dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _STATE.dtype = previous


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Desactiva el registro de operaciones en el grafo."""
    previous = _STATE.grad_enabled
    _STATE.grad_enabled = False
    try:
        yield
    finally:
        _STATE.grad_enabled = previous


def check_finite(values: np.ndarray, where: str) -> None:
    """Lanza NonFiniteError si hay NaN o Inf."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"Valores no finitos producidos por '{where}'.")


@dataclass
class Record:
    """Una operación ejecutada y su producto vector-jacobiano."""

    op: str
    inputs: Tuple["Tensor", ...]
    output: "Tensor"
    vjp: VJP


class Graph:
    """
    Cinta ordenada de las operaciones ejecutadas.

    `backward` recorre la cinta en orden inverso exacto de ejecución. Tras un
    backward la cinta queda consumida; la siguiente operación registrada abre
    una generación nueva. Un segundo backward sin forward nuevo es un error.

    Puede usarse como contexto (`with Graph() as graph:`) para aislar un paso
    de entrenamiento; fuera de un contexto se usa un grafo por defecto por hilo.
    """

    def __init__(self) -> None:
        self.records: List[Record] = []
        self.generation = 0
        self.consumed = False
        self._previous: Optional["Graph"] = None

    def __enter__(self) -> "Graph":
        self._previous = _STATE.graph
        _STATE.graph = self
        return self

    def __exit__(self, *exc: object) -> None:
        _STATE.graph = self._previous
        self._previous = None

    def __len__(self) -> int:
        return len(self.records)

    def record(
        self, op: str, inputs: Tuple["Tensor", ...], output: "Tensor", vjp: VJP
    ) -> None:
        """Agrega una operación a la cinta."""
        if self.consumed:
            self.records = []
            self.consumed = False
            self.generation += 1
        output._graph = self
        output._generation = self.generation
        self.records.append(Record(op=op, inputs=inputs, output=output, vjp=vjp))

    def backward(self, root: "Tensor", seed: Optional[np.ndarray] = None) -> None:
        """
        Propaga adjuntos desde `root` hasta las hojas.

        Parameters:
            root: Tensor producido en la generación actual de este grafo.
            seed: Adjunto inicial; por defecto unos con la forma de `root`.

        Raises:
            GraphStateError: Si la cinta ya fue consumida o `root` no
                pertenece a la generación actual.
        """
        if root._graph is not self:
            raise GraphStateError("El tensor no fue producido por este grafo.")
        if self.consumed or root._generation != self.generation:
            raise GraphStateError("backward repetido sin un forward nuevo.")

        initial = np.ones(root.shape) if seed is None else np.asarray(seed)
        if initial.shape != root.shape:
            raise DimensionError(
                f"Semilla {initial.shape} no coincide con la salida {root.shape}."
            )
        pending: Dict[int, Tuple["Tensor", np.ndarray]] = {
            id(root): (root, initial.astype(root.dtype))
        }
        for entry in reversed(self.records):
            found = pending.pop(id(entry.output), None)
            if found is None:
                continue
            adjoints = entry.vjp(found[1])
            for source, adjoint in zip(entry.inputs, adjoints):
                if adjoint is None or not source.requires_grad:
                    continue
                check_finite(adjoint, f"backward de {entry.op}")
                key = id(source)
                if key in pending:
                    pending[key] = (source, pending[key][1] + adjoint)
                else:
                    pending[key] = (source, adjoint)

        # lo que queda pendiente son hojas
        for leaf, adjoint in pending.values():
            if not leaf.requires_grad:
                continue
            adjoint = adjoint.astype(leaf.dtype)
            leaf.grad = adjoint if leaf.grad is None else leaf.grad + adjoint

        self.records = []
        self.consumed = True


def current_graph() -> Graph:
    """Grafo activo del hilo (el del contexto o el grafo por defecto)."""
    if _STATE.graph is not None:
        return _STATE.graph
    if _STATE.default_graph is None:
        _STATE.default_graph = Graph()
    return _STATE.default_graph


class Tensor:
    """
    Arreglo n-dimensional con gradiente opcional.

    Attributes:
        data: Valores en orden row-major (float32 salvo modo sombra).
        grad: Buffer de gradiente con la misma forma, o None.
        requires_grad: Si las operaciones sobre el tensor se registran.
    """

    def __init__(
        self,
        data: Union[np.ndarray, float, Sequence[float]],
        requires_grad: bool = False,
        dtype: Optional[DTypeLike] = None,
    ):
        values = np.array(data, dtype=dtype or default_dtype())
        if any(extent <= 0 for extent in values.shape):
            raise DimensionError(f"Extensiones no positivas: {values.shape}.")
        check_finite(values, "Tensor")
        self.data: np.ndarray = values
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._graph: Optional[Graph] = None
        self._generation = -1

    @classmethod
    def _wrap(cls, values: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = values
        out.grad = None
        out.requires_grad = requires_grad
        out._graph = None
        out._generation = -1
        return out

    @classmethod
    def zeros(cls, shape: Sequence[int], requires_grad: bool = False) -> "Tensor":
        return cls(np.zeros(tuple(shape)), requires_grad=requires_grad)

    @classmethod
    def full(cls, shape: Sequence[int], value: float) -> "Tensor":
        return cls(np.full(tuple(shape), value))

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        """Valor escalar de un tensor de un solo elemento."""
        if self.size != 1:
            raise DimensionError(f"item() requiere un solo elemento, forma {self.shape}.")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Copia de los valores."""
        return self.data.copy()

    def detach(self) -> "Tensor":
        """Hoja nueva con los mismos valores y sin gradiente."""
        return Tensor._wrap(self.data, requires_grad=False)

    def astype(self, dtype: DTypeLike, requires_grad: Optional[bool] = None) -> "Tensor":
        """Copia como hoja con otro dtype."""
        keep = self.requires_grad if requires_grad is None else requires_grad
        return Tensor(self.data, requires_grad=keep, dtype=dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        """Ejecuta backward en el grafo que produjo este tensor."""
        if self._graph is None:
            raise GraphStateError("El tensor no fue producido por ninguna operación.")
        self._graph.backward(self, seed)

    def __add__(self, other: "Tensor") -> "Tensor":
        from amr_cam.numcore.ops import elementwise

        return elementwise(self, other, "add")

    def __sub__(self, other: "Tensor") -> "Tensor":
        from amr_cam.numcore.ops import elementwise

        return elementwise(self, other, "sub")

    def __mul__(self, other: "Tensor") -> "Tensor":
        from amr_cam.numcore.ops import elementwise

        return elementwise(self, other, "mul")

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


def result_dtype(*tensors: Tensor) -> np.dtype:
    """Dtype de almacenamiento del resultado de una operación."""
    return np.result_type(*[t.dtype for t in tensors])


def from_op(op: str, values: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
    """
    Construye la salida de una operación y la registra si hace falta.

    Parameters:
        op: Nombre de la operación, usado en diagnósticos.
        values: Resultado ya calculado.
        inputs: Operandos tensoriales, en el orden que devuelve `vjp`.
        vjp: Producto vector-jacobiano; recibe el adjunto de la salida y
            devuelve un adjunto (o None) por operando.
    """
    check_finite(values, op)
    needs_grad = _STATE.grad_enabled and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(values, requires_grad=needs_grad)
    if needs_grad:
        current_graph().record(op, tuple(inputs), out, vjp)
    return out
