"""
Caché en disco del conjunto sintético.

Estructura:

    <cache_dir>/dataset.json           configuración que generó el caché
    <cache_dir>/<split>/labels.txt     "índice clase_0 ... clase_{N-1}" por línea
    <cache_dir>/<split>/images/00000.ppm
    <cache_dir>/<split>/masks/00000.pgm

Las imágenes se guardan cuantizadas a 8 bits; las máscaras y etiquetas
quedan exactas.
"""

import json
import logging
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from amr_cam.data import GenerationError
from amr_cam.data.synth import SampleStream
from amr_cam.helpers.images import (
    from_rgb8,
    load_pgm,
    load_ppm,
    save_pgm,
    save_ppm,
    to_rgb8,
)
from amr_cam.models.schemas import DatasetConfig

logger = logging.getLogger(__name__)

CONFIG_FILE = "dataset.json"
MANIFEST = "labels.txt"


def _fingerprint(config: DatasetConfig) -> dict:
    return json.loads(config.model_dump_json(exclude={"cache_dir"}))


def has_cache(cache_dir: Path, config: DatasetConfig) -> bool:
    """Hay un caché completo escrito con esta misma configuración."""
    config_file = cache_dir / CONFIG_FILE
    if not config_file.is_file():
        return False
    stored = json.loads(config_file.read_text(encoding="utf-8"))
    if stored != _fingerprint(config):
        logger.warning("caché en %s es de otra configuración; se ignora", cache_dir)
        return False
    return all((cache_dir / split / MANIFEST).is_file() for split in ("train", "val"))


def write_split(directory: Path, stream: SampleStream) -> int:
    """Escribe una partición y devuelve la cantidad de archivos creados."""
    (directory / "images").mkdir(parents=True, exist_ok=True)
    (directory / "masks").mkdir(parents=True, exist_ok=True)
    for index in range(len(stream)):
        save_ppm(to_rgb8(stream.images[index]), directory / "images" / f"{index:05d}.ppm")
        save_pgm(stream.masks[index], directory / "masks" / f"{index:05d}.pgm")
    manifest = pd.DataFrame(
        stream.labels.astype(np.int64),
        columns=[f"class_{n}" for n in range(stream.n_classes)],
    )
    manifest.insert(0, "index", np.arange(len(stream)))
    manifest.to_csv(directory / MANIFEST, sep=" ", header=False, index=False)
    return 2 * len(stream) + 1


def write_cache(
    cache_dir: Path, config: DatasetConfig, train: SampleStream, val: SampleStream
) -> int:
    """Escribe ambas particiones y la configuración; devuelve archivos creados."""
    cache_dir.mkdir(parents=True, exist_ok=True)
    written = write_split(cache_dir / "train", train) + write_split(cache_dir / "val", val)
    (cache_dir / CONFIG_FILE).write_text(
        json.dumps(_fingerprint(config), sort_keys=True), encoding="utf-8"
    )
    logger.info("caché escrito en %s (%d archivos)", cache_dir, written + 1)
    return written + 1


def read_split(directory: Path, split: str, n_classes: int) -> SampleStream:
    manifest = pd.read_csv(directory / MANIFEST, sep=" ", header=None)
    if manifest.shape[1] != n_classes + 1:
        raise GenerationError(
            f"{directory / MANIFEST}: {manifest.shape[1] - 1} clases en el caché, "
            f"se esperaban {n_classes}."
        )
    indices = manifest.iloc[:, 0].to_numpy()
    images = np.stack(
        [from_rgb8(load_ppm(directory / "images" / f"{i:05d}.ppm")) for i in indices]
    )
    masks = np.stack([load_pgm(directory / "masks" / f"{i:05d}.pgm") for i in indices])
    labels = manifest.iloc[:, 1:].to_numpy().astype(np.float32)
    return SampleStream(split=split, images=images, labels=labels, masks=masks)


def read_cache(cache_dir: Path, config: DatasetConfig) -> Tuple[SampleStream, SampleStream]:
    """Lee las dos particiones de un caché compatible."""
    logger.info("leyendo conjunto sintético desde el caché %s", cache_dir)
    return (
        read_split(cache_dir / "train", "train", config.n_classes),
        read_split(cache_dir / "val", "val", config.n_classes),
    )
