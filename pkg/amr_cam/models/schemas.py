"""Modelos de pydantic comunes."""

from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

ModulationKind = Literal["gaussian", "threshold", "identity"]
CamKind = Literal["spotlight", "compensation", "weighted"]
CAM_KINDS: Tuple[CamKind, ...] = ("spotlight", "compensation", "weighted")


class ModulationFn(BaseModel):
    """
    Elección de la función de modulación.

    Attributes:
        kind: gaussian, threshold o identity.
        threshold: Umbral fijo de la variante threshold. None usa la media del
            propio mapa como umbral adaptativo.
        epsilon: Piso de sigma; por debajo la gaussiana devuelve unos.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ModulationKind = "gaussian"
    threshold: Optional[float] = None
    epsilon: float = Field(default=1e-6, gt=0)

    @model_validator(mode="after")
    def check_threshold(self) -> Self:
        """El umbral solo tiene sentido en la variante threshold."""
        if self.threshold is not None and self.kind != "threshold":
            raise ValueError(f"threshold no aplica a la modulación {self.kind}")
        return self


class ActivationStats(BaseModel):
    """Media y desviación estándar poblacional de un mapa de activación."""

    mu: float
    sigma: float = Field(ge=0)
    count: int = Field(ge=1)


class DatasetConfig(BaseModel):
    """Geometría y semilla del conjunto sintético."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_classes: int = Field(default=5, ge=1, le=8)
    image_size: int = Field(default=64, ge=32)
    train_size: int = Field(default=2000, ge=1)
    val_size: int = Field(default=500, ge=1)
    max_objects_per_image: int = Field(default=2, ge=1)
    noise_std: float = Field(default=0.05, ge=0)
    seed: int = Field(default=42, ge=0, lt=2**64)
    cache_dir: Optional[Path] = None

    @model_validator(mode="after")
    def check_objects(self) -> Self:
        """Una imagen nunca repite clase."""
        if self.max_objects_per_image > self.n_classes:
            raise ValueError(
                "max_objects_per_image no puede superar n_classes "
                f"({self.max_objects_per_image} > {self.n_classes})"
            )
        return self


class ModelConfig(BaseModel):
    """Arquitectura del clasificador de dos ramas."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    widths: Tuple[int, ...] = (16, 32, 64, 64)
    strides: Tuple[int, ...] = (2, 2, 2, 1)
    channel_kernel: int = Field(default=5, ge=1)
    spatial_kernel: int = Field(default=7, ge=1)

    @model_validator(mode="after")
    def check_geometry(self) -> Self:
        """Kernels impares y una zancada por bloque."""
        if len(self.widths) != len(self.strides) or not self.widths:
            raise ValueError("widths y strides deben tener la misma longitud")
        if any(w <= 0 for w in self.widths) or any(s <= 0 for s in self.strides):
            raise ValueError("widths y strides deben ser positivos")
        if self.channel_kernel % 2 == 0 or self.spatial_kernel % 2 == 0:
            raise ValueError("los kernels del AMM deben ser impares")
        return self

    @property
    def feature_channels(self) -> int:
        return self.widths[-1]

    @property
    def output_stride(self) -> int:
        stride = 1
        for s in self.strides:
            stride *= s
        return stride

    def feature_size(self, image_size: int) -> int:
        """Lado del mapa de salida; cada conv3x3 con relleno 1 da ceil(n / s)."""
        size = image_size
        for s in self.strides:
            size = -(-size // s)
        return size


class RunConfig(BaseModel):
    """Todos los hiperparámetros de una corrida."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=8, ge=1)
    batch_size: int = Field(default=16, ge=1)
    lr: float = Field(default=0.01, gt=0)
    lr_power: float = Field(default=0.9, ge=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    weight_decay: float = Field(default=1e-4, ge=0)
    xi: float = Field(default=0.5, ge=0, le=1)
    bg_threshold: float = Field(default=0.25, ge=0, le=1)
    modulation: ModulationFn = ModulationFn()
    seed: int = Field(default=0, ge=0, lt=2**64)
    use_amm_c: bool = True
    use_amm_s: bool = True
    use_cps: bool = True
    flip_prob: float = Field(default=0.5, ge=0, le=1)
    scale_min: float = Field(default=0.75, gt=0)
    scale_max: float = Field(default=1.25, gt=0)
    flip_eval: bool = False
    dataset: DatasetConfig = DatasetConfig()
    model: ModelConfig = ModelConfig()

    @model_validator(mode="after")
    def check_scale(self) -> Self:
        """Rango de escalado ordenado."""
        if self.scale_min > self.scale_max:
            raise ValueError("scale_min debe ser menor o igual que scale_max")
        return self

    @model_validator(mode="after")
    def check_amm_geometry(self) -> Self:
        """Los kernels del AMM deben caber en el mapa de características."""
        size = self.model.feature_size(self.dataset.image_size)
        if self.use_amm_s and size < self.model.spatial_kernel:
            raise ValueError(
                f"imágenes de {self.dataset.image_size}px dan un mapa de "
                f"{size}x{size}, menor que spatial_kernel={self.model.spatial_kernel}"
            )
        if self.use_amm_c and self.model.feature_channels < self.model.channel_kernel:
            raise ValueError(
                f"{self.model.feature_channels} canales de salida, menos que "
                f"channel_kernel={self.model.channel_kernel}"
            )
        return self

    @property
    def use_compensation(self) -> bool:
        """La fila base de la ablación no construye rama de compensación."""
        return self.use_amm_c or self.use_amm_s or self.use_cps


class EpochLoss(BaseModel):
    """Pérdidas medias de una época."""

    epoch: int
    l_all: float
    l_cls: float
    l_cps: float
    steps: int


class VariantMetrics(BaseModel):
    """Calidad de las pseudo-etiquetas de un tipo de CAM."""

    iou: List[Optional[float]]
    miou: float = Field(ge=0, le=1)
    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)


class MetricsReport(BaseModel):
    """Reporte de evaluación: IoU por clase (índice 0 = fondo) y cobertura."""

    split: str
    xi: float
    bg_threshold: float
    variants: Dict[str, VariantMetrics]
    loss_curve: List[EpochLoss] = Field(default_factory=list)


class ParamSpec(BaseModel):
    """Nombre y forma de un parámetro guardado."""

    name: str
    shape: List[int]


class CheckpointManifest(BaseModel):
    """Cabecera de un checkpoint: configuración y lista de parámetros."""

    format_version: int = 1
    config: RunConfig
    params: List[ParamSpec]
