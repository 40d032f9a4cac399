"""Módulo de modulación de atención: primero canal, luego espacio."""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from amr_cam.models.schemas import ModulationFn
from amr_cam.network.modulation import modulate
from amr_cam.numcore import DimensionError
from amr_cam.numcore.ops import conv2d, elementwise, pool, reshape
from amr_cam.numcore.tensor import Tensor


@dataclass
class AmmParams:
    """
    Kernels sin sesgo del AMM.

    Attributes:
        channel_conv: Convolución 1-d sobre el eje de canales, guardada como
            kernel 2-d (1, 1, k_c, 1).
        spatial_conv: Convolución de un canal (1, 1, k_s, k_s).
    """

    channel_conv: Tensor
    spatial_conv: Tensor

    def __post_init__(self) -> None:
        k_c, k_s = self.channel_kernel, self.spatial_kernel
        if self.channel_conv.shape != (1, 1, k_c, 1):
            raise DimensionError(f"channel_conv inválido: {self.channel_conv.shape}.")
        if self.spatial_conv.shape != (1, 1, k_s, k_s):
            raise DimensionError(f"spatial_conv inválido: {self.spatial_conv.shape}.")
        if k_c % 2 == 0 or k_s % 2 == 0:
            raise DimensionError(f"Kernels del AMM deben ser impares: {k_c}, {k_s}.")

    @property
    def channel_kernel(self) -> int:
        return self.channel_conv.shape[2]

    @property
    def spatial_kernel(self) -> int:
        return self.spatial_conv.shape[2]

    @classmethod
    def delta(cls, channel_kernel: int = 5, spatial_kernel: int = 7) -> "AmmParams":
        """Kernels identidad: dejan pasar la entrada sin mezclar."""
        channel = np.zeros((1, 1, channel_kernel, 1))
        channel[0, 0, channel_kernel // 2, 0] = 1.0
        spatial = np.zeros((1, 1, spatial_kernel, spatial_kernel))
        spatial[0, 0, spatial_kernel // 2, spatial_kernel // 2] = 1.0
        return cls(
            channel_conv=Tensor(channel, requires_grad=True),
            spatial_conv=Tensor(spatial, requires_grad=True),
        )

    @classmethod
    def initialize(
        cls,
        channel_kernel: int,
        spatial_kernel: int,
        rng: np.random.Generator,
        noise: float = 0.01,
    ) -> "AmmParams":
        """Kernels delta más ruido gaussiano pequeño."""
        params = cls.delta(channel_kernel, spatial_kernel)
        for tensor in (params.channel_conv, params.spatial_conv):
            jitter = rng.normal(0.0, noise, tensor.shape)
            tensor.data[...] = tensor.data + jitter.astype(tensor.dtype)
        return params

    def parameters(self) -> Dict[str, Tensor]:
        return {"amm.channel_conv": self.channel_conv, "amm.spatial_conv": self.spatial_conv}


def channel_amm(
    features: Tensor, params: AmmParams, fn: ModulationFn
) -> Tuple[Tensor, Tensor]:
    """
    Atención de canal modulada.

    A_c = G(H(P_s(F))) por muestra y F_c = A_c expandida ⊙ F.

    Returns:
        (F_c con forma (B,C,H,W), A_c con forma (B,C)).

    Raises:
        DimensionError: Si C < k_c.
    """
    if features.ndim != 4:
        raise DimensionError(f"channel_amm requiere (B,C,H,W), recibió {features.shape}.")
    batch, channels = features.shape[:2]
    k_c = params.channel_kernel
    if channels < k_c:
        raise DimensionError(f"channel_amm: {channels} canales < kernel {k_c}.")
    pooled = pool(features, "spatial_avg")
    column = reshape(pooled, (batch, 1, channels, 1))
    mixed = conv2d(column, params.channel_conv, padding=((k_c - 1) // 2, 0))
    attention = modulate(reshape(mixed, (batch, channels)), fn, per_sample=True)
    expanded = reshape(attention, (batch, channels, 1, 1))
    return elementwise(expanded, features, "mul"), attention


def spatial_amm(
    features: Tensor, params: AmmParams, fn: ModulationFn
) -> Tuple[Tensor, Tensor]:
    """
    Atención espacial modulada.

    A_s = G(H(P_c(F))) por muestra y F_s = A_s expandida ⊙ F.

    Returns:
        (F_s con forma (B,C,H,W), A_s con forma (B,1,H,W)).

    Raises:
        DimensionError: Si H o W son menores que k_s.
    """
    if features.ndim != 4:
        raise DimensionError(f"spatial_amm requiere (B,C,H,W), recibió {features.shape}.")
    height, width = features.shape[2:]
    k_s = params.spatial_kernel
    if height < k_s or width < k_s:
        raise DimensionError(f"spatial_amm: mapa {height}x{width} < kernel {k_s}.")
    averaged = pool(features, "channel_avg")
    mixed = conv2d(averaged, params.spatial_conv, padding=(k_s - 1) // 2)
    attention = modulate(mixed, fn, per_sample=True)
    return elementwise(attention, features, "mul"), attention


def amm_forward(
    features: Tensor,
    params: AmmParams,
    fn: ModulationFn,
    use_channel: bool = True,
    use_spatial: bool = True,
) -> Tensor:
    """
    Canal primero y luego espacio, estrictamente en secuencia.

    Las banderas permiten las filas de ablación con un solo AMM.
    """
    out = features
    if use_channel:
        out, _ = channel_amm(out, params, fn)
    if use_spatial:
        out, _ = spatial_amm(out, params, fn)
    return out
