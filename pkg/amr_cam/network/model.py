"""
Clasificador AMR de dos ramas.

Un backbone compartido alimenta la cabeza spotlight y, a través del AMM, la
cabeza de compensación. Las CAMs salen de proyectar las características con
los pesos de cada cabeza (M = w^T F), sin sesgo.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import DTypeLike

from amr_cam.models.schemas import ModelConfig, ModulationFn, RunConfig
from amr_cam.network.amm import AmmParams, amm_forward
from amr_cam.numcore import DimensionError
from amr_cam.numcore.ops import conv2d, elementwise, linear, normalize_max, pool, reshape
from amr_cam.numcore.tensor import Tensor

MIN_IMAGE_SIZE = 32
IMAGE_CHANNELS = 3


@dataclass
class Backbone:
    """
    Bloques conv3x3 -> relu; la zancada de cada bloque hace el submuestreo.

    Attributes:
        kernels: Un kernel (C_out, C_in, 3, 3) por bloque.
        strides: Zancada de cada bloque.
    """

    kernels: List[Tensor]
    strides: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.kernels) != len(self.strides):
            raise DimensionError(
                f"{len(self.kernels)} kernels para {len(self.strides)} zancadas."
            )

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "Backbone":
        """Inicialización He sobre el fan-in de cada kernel."""
        kernels = []
        c_in = IMAGE_CHANNELS
        for width in config.widths:
            std = np.sqrt(2.0 / (c_in * 9))
            kernels.append(
                Tensor(rng.normal(0.0, std, (width, c_in, 3, 3)), requires_grad=True)
            )
            c_in = width
        return cls(kernels=kernels, strides=tuple(config.strides))

    @property
    def out_channels(self) -> int:
        return self.kernels[-1].shape[0]

    def __call__(self, images: Tensor) -> Tensor:
        out = images
        for kernel, stride in zip(self.kernels, self.strides):
            out = elementwise(conv2d(out, kernel, stride=stride, padding=1), op="relu")
        return out

    def parameters(self) -> Dict[str, Tensor]:
        return {f"backbone.conv{i}": k for i, k in enumerate(self.kernels)}


@dataclass
class AmrModel:
    """
    Backbone compartido más dos cabezas lineales sin sesgo.

    Attributes:
        backbone: Extractor de características F(I).
        spotlight_head: Pesos (N, C_feat) de la rama spotlight.
        amm: Kernels del AMM; None si ninguna etapa del AMM está activa.
        compensation_head: Pesos (N, C_feat) de la rama de compensación, o
            None en la fila base de la ablación.
        use_amm_c: Aplica la etapa de canal del AMM.
        use_amm_s: Aplica la etapa espacial del AMM.
    """

    backbone: Backbone
    spotlight_head: Tensor
    amm: Optional[AmmParams] = None
    compensation_head: Optional[Tensor] = None
    use_amm_c: bool = True
    use_amm_s: bool = True

    def __post_init__(self) -> None:
        channels = self.backbone.out_channels
        if self.spotlight_head.ndim != 2 or self.spotlight_head.shape[1] != channels:
            raise DimensionError(
                f"spotlight_head {self.spotlight_head.shape} no consume {channels} canales."
            )
        if (
            self.compensation_head is not None
            and self.compensation_head.shape != self.spotlight_head.shape
        ):
            raise DimensionError(
                f"compensation_head {self.compensation_head.shape} difiere de "
                f"spotlight_head {self.spotlight_head.shape}."
            )
        if (self.use_amm_c or self.use_amm_s) and self.compensation_head is not None:
            if self.amm is None:
                raise DimensionError("Etapas del AMM activas sin parámetros del AMM.")

    @classmethod
    def build(cls, config: RunConfig, rng: np.random.Generator) -> "AmrModel":
        """
        Construye el modelo para una corrida.

        Las banderas de ablación deciden qué existe: sin AMM ni L_cps no hay
        rama de compensación, y sin etapas del AMM no hay kernels del AMM.
        """
        backbone = Backbone.initialize(config.model, rng)
        n_classes = config.dataset.n_classes
        channels = config.model.feature_channels
        std = 1.0 / np.sqrt(channels)
        spotlight = Tensor(rng.normal(0.0, std, (n_classes, channels)), requires_grad=True)
        amm = None
        compensation = None
        if config.use_compensation:
            compensation = Tensor(
                rng.normal(0.0, std, (n_classes, channels)), requires_grad=True
            )
            if config.use_amm_c or config.use_amm_s:
                amm = AmmParams.initialize(
                    config.model.channel_kernel, config.model.spatial_kernel, rng
                )
        return cls(
            backbone=backbone,
            spotlight_head=spotlight,
            amm=amm,
            compensation_head=compensation,
            use_amm_c=config.use_amm_c,
            use_amm_s=config.use_amm_s,
        )

    @property
    def n_classes(self) -> int:
        return self.spotlight_head.shape[0]

    @property
    def has_compensation(self) -> bool:
        return self.compensation_head is not None

    def parameters(self) -> Dict[str, Tensor]:
        """Parámetros entrenables por nombre, en orden estable."""
        params = dict(self.backbone.parameters())
        params["spotlight_head"] = self.spotlight_head
        if self.amm is not None:
            params.update(self.amm.parameters())
        if self.compensation_head is not None:
            params["compensation_head"] = self.compensation_head
        return params

    def cast(self, dtype: DTypeLike) -> "AmrModel":
        """Copia con todas las hojas en otro dtype (modo sombra de 64 bits)."""
        amm = None
        if self.amm is not None:
            amm = AmmParams(
                channel_conv=self.amm.channel_conv.astype(dtype),
                spatial_conv=self.amm.spatial_conv.astype(dtype),
            )
        return AmrModel(
            backbone=Backbone(
                kernels=[k.astype(dtype) for k in self.backbone.kernels],
                strides=self.backbone.strides,
            ),
            spotlight_head=self.spotlight_head.astype(dtype),
            amm=amm,
            compensation_head=(
                None
                if self.compensation_head is None
                else self.compensation_head.astype(dtype)
            ),
            use_amm_c=self.use_amm_c,
            use_amm_s=self.use_amm_s,
        )


@dataclass
class ForwardOut:
    """
    Salida del forward.

    Sin rama de compensación, `logits_c` y `cam_c` son los mismos tensores que
    los de la rama spotlight.
    """

    logits_s: Tensor
    logits_c: Tensor
    cam_s: Tensor
    cam_c: Tensor
    features: Tensor
    compensated: Optional[Tensor] = field(default=None)


def class_activation(features: Tensor, head: Tensor) -> Tensor:
    """M[b, n] = sum_c w[n, c] F[b, c] como convolución 1x1."""
    n_classes, channels = head.shape
    return conv2d(features, reshape(head, (n_classes, channels, 1, 1)))


def forward(model: AmrModel, images: Tensor, fn: ModulationFn) -> ForwardOut:
    """
    Forward de las dos ramas.

    Parameters:
        model: Modelo AMR.
        images: Tensor (B, 3, H, W) con H, W >= 32; con el AMM espacial el
            mapa de características debe además cubrir su kernel.
        fn: Función de modulación del AMM.

    Raises:
        DimensionError: Si las imágenes no tienen la forma esperada o el mapa
            de características es menor que el kernel del AMM.
    """
    if images.ndim != 4 or images.shape[1] != IMAGE_CHANNELS:
        raise DimensionError(f"Se esperaban imágenes (B,3,H,W), llegó {images.shape}.")
    height, width = images.shape[2:]
    if height < MIN_IMAGE_SIZE or width < MIN_IMAGE_SIZE:
        raise DimensionError(
            f"Imagen {height}x{width} menor que el mínimo {MIN_IMAGE_SIZE}."
        )
    features = model.backbone(images)
    logits_s = linear(pool(features, "global_avg"), model.spotlight_head)
    cam_s = class_activation(features, model.spotlight_head)
    if model.compensation_head is None:
        return ForwardOut(
            logits_s=logits_s,
            logits_c=logits_s,
            cam_s=cam_s,
            cam_c=cam_s,
            features=features,
        )

    compensated = features
    if model.amm is not None:
        compensated = amm_forward(
            features,
            model.amm,
            fn,
            use_channel=model.use_amm_c,
            use_spatial=model.use_amm_s,
        )
    logits_c = linear(pool(compensated, "global_avg"), model.compensation_head)
    cam_c = class_activation(compensated, model.compensation_head)
    return ForwardOut(
        logits_s=logits_s,
        logits_c=logits_c,
        cam_s=cam_s,
        cam_c=cam_c,
        features=features,
        compensated=compensated,
    )


def normalize_cam(cam: Tensor, labels: np.ndarray) -> Tensor:
    """
    Enmascara clases ausentes, aplica relu y normaliza por el máximo.

    Parameters:
        cam: CAMs crudas (B, N, H, W).
        labels: Multi-hot (B, N).

    Returns:
        Tensor (B, N, H, W) en [0, 1]; mapas ausentes o sin activación en cero.
    """
    if cam.ndim != 4 or labels.shape != cam.shape[:2]:
        raise DimensionError(
            f"normalize_cam: cams {cam.shape} y etiquetas {labels.shape}."
        )
    mask = Tensor(
        (np.asarray(labels) > 0).astype(np.float64)[:, :, None, None], dtype=cam.dtype
    )
    return normalize_max(elementwise(elementwise(cam, mask, "mul"), op="relu"))
