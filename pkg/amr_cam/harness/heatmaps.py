"""Exportación de CAMs como mapas de calor PGM junto a la imagen de entrada."""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from amr_cam.data.synth import SampleStream
from amr_cam.harness import ConfigError
from amr_cam.harness.evaluate import Evaluator, load_split
from amr_cam.helpers.images import quantize, save_pgm, save_ppm, to_rgb8
from amr_cam.helpers.logger import LoggerMixin
from amr_cam.models.schemas import RunConfig
from amr_cam.network.checkpoint import load_checkpoint
from amr_cam.network.model import AmrModel


class HeatmapExporter(LoggerMixin):
    """
    Escribe por muestra la entrada (PPM) y, por cada clase presente, las CAMs
    spotlight, compensación y ponderada (PGM de 8 bits, 1.0 -> 255).
    """

    def __init__(
        self, model: AmrModel, config: RunConfig, logger: Optional[logging.Logger] = None
    ):
        super().__init__(logger)
        self.evaluator = Evaluator(model, config, logger)
        self.config = config

    def export(
        self, stream: SampleStream, indices: Sequence[int], out_dir: Path
    ) -> List[Path]:
        """
        Exporta las muestras pedidas y devuelve los archivos escritos.

        Raises:
            ConfigError: Si algún índice está fuera de la partición.
        """
        invalid = [i for i in indices if not 0 <= i < len(stream)]
        if invalid:
            raise ConfigError(
                f"Índices fuera de la partición {stream.split} ({len(stream)}): {invalid}."
            )
        out_dir.mkdir(parents=True, exist_ok=True)
        batch = stream.take(np.asarray(indices, dtype=np.int64))
        stacks_s, stacks_c = self.evaluator.cam_stacks(batch)
        size = (stream.images.shape[2], stream.images.shape[3])
        written: List[Path] = []
        for b, index in enumerate(batch.indices):
            stem = f"{stream.split}_{int(index):05d}"
            input_path = out_dir / f"{stem}_input.ppm"
            save_ppm(to_rgb8(batch.images[b]), input_path)
            written.append(input_path)
            variants = self.evaluator.variants(
                stacks_s[b], stacks_c[b], self.config.xi, size
            )
            for n in np.flatnonzero(stacks_s[b].class_mask):
                for kind, cam in variants.items():
                    path = out_dir / f"{stem}_class{int(n)}_{kind}.pgm"
                    save_pgm(quantize(cam.maps.data[n]), path)
                    written.append(path)
        self.logger.info("%d mapas de calor escritos en %s", len(written), out_dir)
        return written


def export_heatmaps(
    checkpoint: Path, sample_indices: Sequence[int], out_dir: Path, split: str = "val"
) -> List[Path]:
    """Carga el checkpoint y exporta los mapas de calor de las muestras pedidas."""
    model, config = load_checkpoint(checkpoint)
    stream = load_split(config, split)
    return HeatmapExporter(model, config).export(stream, sample_indices, out_dir)
