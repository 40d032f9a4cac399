"""
Generador determinista del conjunto sintético.

Cada objeto es un cuerpo grande (rectángulo o elipse) con una textura gris
común a todas las clases, más un parche de firma pequeño con el color y las
rayas propios de su clase. La clase solo se reconoce por la firma, mientras
que la máscara cubre el cuerpo entero.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Literal, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image, ImageDraw

from amr_cam.data import GenerationError
from amr_cam.helpers.logger import LoggerMixin
from amr_cam.models.schemas import DatasetConfig

Split = Literal["train", "val"]
SPLIT_IDS = {"train": 0, "val": 1}

# colores brillantes de firma, uno por clase
PALETTE = np.array(
    [
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
        (1.0, 1.0, 0.0),
        (1.0, 0.0, 1.0),
        (0.0, 1.0, 1.0),
        (1.0, 0.5, 0.0),
        (0.5, 0.0, 1.0),
    ]
)
DIM_STRIPE = 0.6

BODY_AREA = (0.15, 0.30)
SIGNATURE_FRACTION = 0.08
PLACEMENT_RETRIES = 50
MAX_OCCLUSION = 0.2
RESAMPLE_LIMIT = 100


@dataclass
class Sample:
    """Una imagen (3, S, S), su máscara (S, S) y su multi-hot (N,)."""

    image: np.ndarray
    mask: np.ndarray
    labels: np.ndarray
    signature: np.ndarray


@dataclass
class SampleBatch:
    """
    Lote de muestras.

    Attributes:
        images: (B, 3, S, S) float32 en [0, 1].
        labels: Multi-hot (B, N) float32.
        masks: (B, S, S) enteros; 0 fondo, 1..N clase. Solo para evaluación.
        indices: Índice de cada muestra dentro de su partición.
    """

    images: np.ndarray
    labels: np.ndarray
    masks: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return int(self.images.shape[0])


class SampleStream:
    """Partición materializada que entrega lotes en orden o permutados."""

    def __init__(
        self,
        split: str,
        images: np.ndarray,
        labels: np.ndarray,
        masks: np.ndarray,
        signatures: Optional[np.ndarray] = None,
    ):
        self.split = split
        self.images = images
        self.labels = labels
        self.masks = masks
        self.signatures = signatures

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.labels.shape[1])

    def take(self, indices: np.ndarray) -> SampleBatch:
        indices = np.asarray(indices, dtype=np.int64)
        return SampleBatch(
            images=self.images[indices],
            labels=self.labels[indices],
            masks=self.masks[indices],
            indices=indices,
        )

    def batches(
        self, batch_size: int, rng: Optional[np.random.Generator] = None
    ) -> Iterator[SampleBatch]:
        """Lotes consecutivos; con `rng` el orden se permuta."""
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for start in range(0, len(self), batch_size):
            yield self.take(order[start : start + batch_size])


def body_texture(size: int) -> np.ndarray:
    """Textura diagonal gris de los cuerpos, igual para todas las clases."""
    y, x = np.mgrid[0:size, 0:size]
    return 0.55 + 0.1 * np.sin(2.0 * np.pi * (x + y) / 8.0)


def background_texture(size: int) -> np.ndarray:
    """Textura de rayas horizontales del fondo."""
    y, _ = np.mgrid[0:size, 0:size]
    return 0.3 + 0.08 * np.sin(2.0 * np.pi * y / 6.0)


def signature_pattern(class_index: int, height: int, width: int) -> np.ndarray:
    """Parche (3, h, w) con el color de la clase en rayas de brillo 1.0 / 0.6."""
    y, x = np.mgrid[0:height, 0:width]
    coordinate = (y, x, x + y, x - y + width)[class_index % 4]
    stripe = 1 + class_index // 4
    bright = (coordinate // stripe) % 2 == 0
    level = np.where(bright, 1.0, DIM_STRIPE)
    return PALETTE[class_index][:, None, None] * level[None]


def _draw_body(size: int, rng: np.random.Generator) -> np.ndarray:
    area = rng.uniform(*BODY_AREA) * size * size
    aspect = rng.uniform(0.7, 1.4)
    canvas = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(canvas)
    if rng.random() < 0.5:
        width = int(round(np.sqrt(area * aspect)))
        height = int(round(area / max(width, 1)))
    else:
        semi = np.sqrt(area * aspect / np.pi)
        width = int(round(2 * semi))
        height = int(round(2 * area / (np.pi * semi)))
    width, height = min(width, size - 2), min(height, size - 2)
    left = int(rng.integers(0, size - width))
    top = int(rng.integers(0, size - height))
    box = (left, top, left + width - 1, top + height - 1)
    if rng.random() < 0.5:
        draw.rectangle(box, fill=1)
    else:
        draw.ellipse(box, fill=1)
    return np.asarray(canvas, dtype=bool)


def _place_signature(
    body: np.ndarray, rng: np.random.Generator
) -> Tuple[int, int, int]:
    side = max(3, int(np.floor(np.sqrt(SIGNATURE_FRACTION * body.sum()))))
    windows = sliding_window_view(body, (side, side)).all(axis=(2, 3))
    candidates = np.argwhere(windows)
    if candidates.size == 0:
        raise GenerationError(f"La firma de {side}px no cabe en el cuerpo.")
    top, left = candidates[rng.integers(0, len(candidates))]
    return int(top), int(left), side


def _occlusion_allowed(
    body: np.ndarray, mask: np.ndarray, signature: np.ndarray, areas: Dict[int, int]
) -> bool:
    """Un cuerpo nuevo no tapa firmas y deja visible casi todo objeto previo."""
    if np.any(body & signature):
        return False
    for label, area in areas.items():
        visible = np.sum((mask == label) & ~body)
        if visible < (1.0 - MAX_OCCLUSION) * area:
            return False
    return True


def draw_sample(config: DatasetConfig, rng: np.random.Generator) -> Sample:
    """
    Dibuja una muestra con un generador ya sembrado.

    Los objetos se dibujan en orden y cada uno tapa a los anteriores en la
    imagen y en la máscara, sin cubrir nunca una firma previa.

    Raises:
        GenerationError: Si un cuerpo no encuentra lugar válido tras los
            reintentos o la firma no cabe dentro del cuerpo.
    """
    size = config.image_size
    count = int(rng.integers(1, config.max_objects_per_image + 1))
    classes = rng.choice(config.n_classes, size=count, replace=False)

    body_values = body_texture(size)
    image = np.repeat(background_texture(size)[None], 3, axis=0)
    mask = np.zeros((size, size), dtype=np.uint8)
    signature = np.zeros((size, size), dtype=bool)
    areas: Dict[int, int] = {}
    for class_index in classes:
        for _ in range(PLACEMENT_RETRIES):
            body = _draw_body(size, rng)
            if _occlusion_allowed(body, mask, signature, areas):
                break
        else:
            raise GenerationError(
                f"Sin lugar para la clase {class_index} tras {PLACEMENT_RETRIES} intentos."
            )
        top, left, side = _place_signature(body, rng)
        areas[int(class_index) + 1] = int(body.sum())
        image[:, body] = body_values[body]
        image[:, top : top + side, left : left + side] = signature_pattern(
            int(class_index), side, side
        )
        mask[body] = class_index + 1
        signature[top : top + side, left : left + side] = True

    if config.noise_std > 0:
        image = image + rng.normal(0.0, config.noise_std, image.shape)
    image = np.clip(image, 0.0, 1.0).astype(np.float32)
    labels = np.zeros(config.n_classes, dtype=np.float32)
    present = np.unique(mask[mask > 0]) - 1
    labels[present] = 1.0
    return Sample(image=image, mask=mask, labels=labels, signature=signature)


class DatasetGenerator(LoggerMixin):
    """
    Genera las particiones como función pura de (configuración, índice).

    Cada muestra usa su propio flujo aleatorio derivado de
    (semilla, partición, índice, intento); un GenerationError se resuelve
    re-muestreando con el intento siguiente.
    """

    def __init__(self, config: DatasetConfig, logger: Optional[logging.Logger] = None):
        super().__init__(logger)
        self.config = config

    def rng_for(self, split: Split, index: int, attempt: int) -> np.random.Generator:
        entropy = [self.config.seed, SPLIT_IDS[split], index, attempt]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def sample(self, split: Split, index: int) -> Sample:
        for attempt in range(RESAMPLE_LIMIT):
            try:
                return draw_sample(self.config, self.rng_for(split, index, attempt))
            except GenerationError as error:
                self.logger.debug(
                    "muestra %s/%d intento %d re-muestreada: %s",
                    split,
                    index,
                    attempt,
                    error.message,
                )
        raise GenerationError(
            f"Muestra {split}/{index} sin ubicación válida tras {RESAMPLE_LIMIT} intentos."
        )

    def split(self, split: Split) -> SampleStream:
        count = self.config.train_size if split == "train" else self.config.val_size
        samples: List[Sample] = [self.sample(split, i) for i in range(count)]
        stream = SampleStream(
            split=split,
            images=np.stack([s.image for s in samples]),
            labels=np.stack([s.labels for s in samples]),
            masks=np.stack([s.mask for s in samples]),
            signatures=np.stack([s.signature for s in samples]),
        )
        frequency = stream.labels.mean(axis=0)
        self.logger.info(
            "partición %s: %d imágenes, frecuencia por clase %s",
            split,
            count,
            np.array2string(frequency, precision=3),
        )
        return stream

    def generate(self) -> Tuple[SampleStream, SampleStream]:
        return self.split("train"), self.split("val")


def generate(config: DatasetConfig) -> Tuple[SampleStream, SampleStream]:
    """
    Particiones de entrenamiento y validación.

    Si `config.cache_dir` contiene un caché escrito para esta misma
    configuración, se lee de disco en lugar de generar.
    """
    from amr_cam.data.cache import has_cache, read_cache

    if config.cache_dir is not None and has_cache(config.cache_dir, config):
        return read_cache(config.cache_dir, config)
    return DatasetGenerator(config).generate()


def generate_split(config: DatasetConfig, split: Split) -> SampleStream:
    """Una sola partición, del caché si existe."""
    from amr_cam.data.cache import has_cache, read_split

    if config.cache_dir is not None and has_cache(config.cache_dir, config):
        return read_split(config.cache_dir / split, split, config.n_classes)
    return DatasetGenerator(config).split(split)
