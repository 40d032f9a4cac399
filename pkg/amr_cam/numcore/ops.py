"""
Operaciones diferenciables del motor.

Todas las reducciones y productos acumulan en 64 bits y guardan el resultado
en el dtype de los operandos.
"""

from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from amr_cam.numcore import DimensionError
from amr_cam.numcore.tensor import Tensor, from_op, result_dtype

PoolMode = Literal["spatial_avg", "channel_avg", "global_avg"]
ElementwiseOp = Literal["mul", "add", "sub", "relu", "sigmoid", "abs"]

_BINARY = ("mul", "add", "sub")
_UNARY = ("relu", "sigmoid", "abs")


def _pair(value: Union[int, Tuple[int, int]]) -> Tuple[int, int]:
    if isinstance(value, tuple):
        return value
    return value, value


def _require_rank(tensor: Tensor, rank: int, op: str) -> None:
    if tensor.ndim != rank:
        raise DimensionError(f"{op} requiere rango {rank}, recibió {tensor.shape}.")


def conv2d(
    input: Tensor,
    kernel: Tensor,
    stride: int = 1,
    padding: Union[int, Tuple[int, int]] = 0,
) -> Tensor:
    """
    Convolución 2-d (correlación cruzada) sin sesgo.

    Parameters:
        input: Tensor (B, C_in, H, W).
        kernel: Tensor (C_out, C_in, kh, kw). Los kernels cuadrados son el caso
            habitual; el AMM de canal usa kw=1.
        stride: Paso positivo, igual en ambos ejes.
        padding: Relleno con ceros, entero o (ph, pw).

    Returns:
        Tensor (B, C_out, H', W') con H' = floor((H + 2ph - kh) / stride) + 1.
    """
    _require_rank(input, 4, "conv2d")
    _require_rank(kernel, 4, "conv2d")
    batch, c_in, height, width = input.shape
    c_out, k_in, kh, kw = kernel.shape
    if k_in != c_in:
        raise DimensionError(
            f"conv2d: la entrada tiene {c_in} canales y el kernel espera {k_in}."
        )
    if stride <= 0:
        raise DimensionError(f"conv2d: stride debe ser positivo, recibió {stride}.")
    ph, pw = _pair(padding)
    if ph < 0 or pw < 0:
        raise DimensionError(f"conv2d: padding negativo {padding}.")
    if kh > height + 2 * ph or kw > width + 2 * pw:
        raise DimensionError(
            f"conv2d: kernel {kh}x{kw} mayor que la entrada rellenada "
            f"{height + 2 * ph}x{width + 2 * pw}."
        )
    out_h = (height + 2 * ph - kh) // stride + 1
    out_w = (width + 2 * pw - kw) // stride + 1
    dtype = result_dtype(input, kernel)

    padded = np.pad(
        input.data.astype(np.float64), ((0, 0), (0, 0), (ph, ph), (pw, pw))
    )
    weights = kernel.data.astype(np.float64)
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[
        :, :, ::stride, ::stride
    ]
    values = np.tensordot(windows, weights, axes=([1, 4, 5], [1, 2, 3]))
    values = values.transpose(0, 3, 1, 2)

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        g = grad.astype(np.float64)
        grad_kernel = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_padded = np.zeros_like(padded)
        row_stop = stride * (out_h - 1) + 1
        col_stop = stride * (out_w - 1) + 1
        for i in range(kh):
            for j in range(kw):
                contrib = np.tensordot(g, weights[:, :, i, j], axes=([1], [0]))
                grad_padded[
                    :, :, i : i + row_stop : stride, j : j + col_stop : stride
                ] += contrib.transpose(0, 3, 1, 2)
        grad_input = grad_padded[:, :, ph : ph + height, pw : pw + width]
        return grad_input.astype(dtype), grad_kernel.astype(dtype)

    return from_op("conv2d", values.astype(dtype), (input, kernel), vjp)


def pool(input: Tensor, mode: PoolMode) -> Tensor:
    """
    Promedios de la atención y de la clasificación.

    - spatial_avg: (B,C,H,W) -> (B,C,1,1), media sobre H×W.
    - channel_avg: (B,C,H,W) -> (B,1,H,W), media sobre C.
    - global_avg: (B,C,H,W) -> (B,C), media sobre H×W.
    """
    _require_rank(input, 4, "pool")
    batch, channels, height, width = input.shape
    dtype = input.dtype
    data = input.data
    if mode == "channel_avg":
        axes: Tuple[int, ...] = (1,)
        count = channels
    elif mode in ("spatial_avg", "global_avg"):
        axes = (2, 3)
        count = height * width
    else:
        raise ValueError(f"Modo de pooling desconocido: {mode}.")

    values = np.mean(data, axis=axes, dtype=np.float64, keepdims=True)
    if mode == "global_avg":
        values = values.reshape(batch, channels)

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        g = grad.astype(np.float64)
        if mode == "global_avg":
            g = g.reshape(batch, channels, 1, 1)
        return (np.broadcast_to(g / count, data.shape).astype(dtype),)

    return from_op(f"pool[{mode}]", values.astype(dtype), (input,), vjp)


def linear(input: Tensor, weight: Tensor) -> Tensor:
    """
    Capa lineal sin sesgo: out[b, n] = sum_c weight[n, c] * input[b, c].

    Las cabezas de CAM no llevan sesgo para que M = w^T F se cumpla exactamente.
    """
    _require_rank(input, 2, "linear")
    _require_rank(weight, 2, "linear")
    if input.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"linear: entrada {input.shape} incompatible con pesos {weight.shape}."
        )
    dtype = result_dtype(input, weight)
    x = input.data.astype(np.float64)
    w = weight.data.astype(np.float64)

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        g = grad.astype(np.float64)
        return (g @ w).astype(dtype), (g.T @ x).astype(dtype)

    return from_op("linear", (x @ w.T).astype(dtype), (input, weight), vjp)


def broadcast_shape(left: Tuple[int, ...], right: Tuple[int, ...]) -> Tuple[int, ...]:
    """
    Forma resultante de expandir ejes de tamaño 1.

    Ambos operandos deben tener el mismo rango; un eje solo se expande si en
    uno de los dos mide 1, así que los demás ejes nunca cambian.
    """
    if len(left) != len(right):
        raise DimensionError(f"Rangos distintos: {left} y {right}.")
    shape = []
    for a, b in zip(left, right):
        if a != b and a != 1 and b != 1:
            raise DimensionError(f"Formas no compatibles: {left} y {right}.")
        shape.append(max(a, b))
    return tuple(shape)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    axes = tuple(i for i, extent in enumerate(shape) if extent == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    exp_x = np.exp(x[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out


def elementwise(
    input: Tensor, other: Optional[Tensor] = None, op: ElementwiseOp = "mul"
) -> Tensor:
    """
    Operación punto a punto con difusión de ejes de tamaño 1.

    Las binarias (mul, add, sub) requieren `other`; las unarias (relu, sigmoid,
    abs) lo ignoran. relu'(0) y abs'(0) se definen como 0.
    """
    if op in _BINARY:
        if other is None:
            raise ValueError(f"La operación {op} requiere dos operandos.")
        return _binary(input, other, op)
    if op in _UNARY:
        return _unary(input, op)
    raise ValueError(f"Operación desconocida: {op}.")


def _binary(input: Tensor, other: Tensor, op: str) -> Tensor:
    out_shape = broadcast_shape(input.shape, other.shape)
    dtype = result_dtype(input, other)
    a = input.data.astype(np.float64)
    b = other.data.astype(np.float64)
    if op == "mul":
        values = a * b
    elif op == "add":
        values = a + b
    else:
        values = a - b

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        g = grad.astype(np.float64)
        if op == "mul":
            grad_a, grad_b = g * b, g * a
        elif op == "add":
            grad_a, grad_b = g, g
        else:
            grad_a, grad_b = g, -g
        return (
            _unbroadcast(np.broadcast_to(grad_a, out_shape), input.shape).astype(dtype),
            _unbroadcast(np.broadcast_to(grad_b, out_shape), other.shape).astype(dtype),
        )

    return from_op(op, values.astype(dtype), (input, other), vjp)


def _unary(input: Tensor, op: str) -> Tensor:
    dtype = input.dtype
    x = input.data.astype(np.float64)
    if op == "relu":
        values = np.maximum(x, 0.0)
        slope = (x > 0).astype(np.float64)
    elif op == "sigmoid":
        values = _sigmoid(x)
        slope = values * (1.0 - values)
    else:
        values = np.abs(x)
        slope = np.sign(x)

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return ((grad.astype(np.float64) * slope).astype(dtype),)

    return from_op(op, values.astype(dtype), (input,), vjp)


def reshape(input: Tensor, shape: Sequence[int]) -> Tensor:
    """Cambia la forma sin mover datos."""
    target = tuple(shape)
    if int(np.prod(target)) != input.size:
        raise DimensionError(f"reshape: {input.shape} no cabe en {target}.")
    original = input.shape

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return (grad.reshape(original),)

    return from_op("reshape", input.data.reshape(target), (input,), vjp)


def reduce_sum(
    input: Tensor, axes: Optional[Tuple[int, ...]] = None, keepdims: bool = False
) -> Tensor:
    """Suma sobre `axes` (todos por defecto) acumulando en 64 bits."""
    dtype = input.dtype
    reduced = tuple(range(input.ndim)) if axes is None else axes
    values = np.sum(input.data, axis=reduced, dtype=np.float64, keepdims=keepdims)
    kept_shape = tuple(1 if i in reduced else n for i, n in enumerate(input.shape))

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        g = np.asarray(grad).reshape(kept_shape)
        return (np.broadcast_to(g, input.shape).astype(dtype),)

    return from_op("reduce_sum", np.asarray(values).astype(dtype), (input,), vjp)


def reduce_mean(
    input: Tensor, axes: Optional[Tuple[int, ...]] = None, keepdims: bool = False
) -> Tensor:
    """Media sobre `axes` (todos por defecto)."""
    reduced = tuple(range(input.ndim)) if axes is None else axes
    count = int(np.prod([input.shape[i] for i in reduced]))
    return scale(reduce_sum(input, reduced, keepdims), 1.0 / count)


def scale(input: Tensor, factor: float) -> Tensor:
    """Multiplica por una constante."""
    dtype = input.dtype

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return ((grad.astype(np.float64) * factor).astype(dtype),)

    values = input.data.astype(np.float64) * factor
    return from_op("scale", values.astype(dtype), (input,), vjp)


def soft_margin(logits: Tensor, targets: np.ndarray) -> Tensor:
    """
    Pérdida logística por elemento en forma estable.

    -[y log s(x) + (1 - y) log(1 - s(x))] = softplus(x) - y x,
    con softplus(x) = max(x, 0) + log1p(exp(-|x|)).
    """
    if targets.shape != logits.shape:
        raise DimensionError(
            f"soft_margin: etiquetas {targets.shape} y logits {logits.shape}."
        )
    dtype = logits.dtype
    x = logits.data.astype(np.float64)
    y = targets.astype(np.float64)
    values = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x))) - y * x

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return ((grad.astype(np.float64) * (_sigmoid(x) - y)).astype(dtype),)

    return from_op("soft_margin", values.astype(dtype), (logits,), vjp)


def normalize_max(input: Tensor, eps: float = 1e-8) -> Tensor:
    """
    Divide cada mapa (dos últimos ejes) por su máximo.

    Los mapas con máximo menor que `eps` quedan en cero. El gradiente fluye
    también a través del máximo (primer índice del máximo en empates).
    """
    if input.ndim < 2:
        raise DimensionError(f"normalize_max requiere rango >= 2, {input.shape}.")
    dtype = input.dtype
    lead = input.shape[:-2]
    flat = input.data.astype(np.float64).reshape(lead + (-1,))
    peak_index = np.argmax(flat, axis=-1)
    peak = np.take_along_axis(flat, peak_index[..., None], axis=-1)
    valid = peak >= eps
    safe_peak = np.where(valid, peak, 1.0)
    values = np.where(valid, flat / safe_peak, 0.0)

    def vjp(grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        g = grad.astype(np.float64).reshape(flat.shape)
        g_input = np.where(valid, g / safe_peak, 0.0)
        through_peak = np.sum(g * flat, axis=-1, keepdims=True) / safe_peak**2
        correction = np.zeros_like(flat)
        np.put_along_axis(
            correction, peak_index[..., None], np.where(valid, through_peak, 0.0), axis=-1
        )
        return ((g_input - correction).reshape(input.shape).astype(dtype),)

    return from_op(
        "normalize_max", values.reshape(input.shape).astype(dtype), (input,), vjp
    )
