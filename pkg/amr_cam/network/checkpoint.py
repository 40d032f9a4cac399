"""
Archivo de checkpoint.

Formato: una línea `AMRCKPT 1`, una línea JSON con el manifiesto (configuración
de la corrida y nombre/forma de cada parámetro) y luego un volcado TNSR por
parámetro, en el orden del manifiesto.
"""

import json
import logging
from pathlib import Path
from typing import Tuple

import numpy as np
from pydantic import ValidationError

from amr_cam.harness import CheckpointError
from amr_cam.helpers.pydantic import serialize_validation_errors
from amr_cam.models.schemas import CheckpointManifest, ParamSpec, RunConfig
from amr_cam.network.model import AmrModel
from amr_cam.numcore import NumcoreError
from amr_cam.numcore.serialize import dump_tensor, load_tensor

logger = logging.getLogger(__name__)

MAGIC = "AMRCKPT"
FORMAT_VERSION = 1


def save_checkpoint(model: AmrModel, config: RunConfig, path: Path) -> None:
    """Escribe el modelo y su configuración en `path`."""
    params = model.parameters()
    manifest = CheckpointManifest(
        format_version=FORMAT_VERSION,
        config=config,
        params=[ParamSpec(name=name, shape=list(t.shape)) for name, t in params.items()],
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as stream:
        stream.write(f"{MAGIC} {FORMAT_VERSION}\n".encode("ascii"))
        stream.write(manifest.model_dump_json().encode("utf-8") + b"\n")
        for tensor in params.values():
            dump_tensor(tensor, stream)
    logger.info("checkpoint con %d parámetros escrito en %s", len(params), path)


def load_checkpoint(path: Path) -> Tuple[AmrModel, RunConfig]:
    """
    Lee un checkpoint escrito por `save_checkpoint`.

    Raises:
        CheckpointError: Si el archivo no existe, está truncado o sus
            parámetros no corresponden a la arquitectura de su configuración.
    """
    try:
        with open(path, "rb") as stream:
            header = stream.readline().decode("ascii", errors="replace").split()
            if header != [MAGIC, str(FORMAT_VERSION)]:
                raise CheckpointError(f"{path}: cabecera de checkpoint inválida.")
            manifest = CheckpointManifest.model_validate(
                json.loads(stream.readline().decode("utf-8"))
            )
            model = AmrModel.build(manifest.config, np.random.default_rng(0))
            params = model.parameters()
            expected = [(name, list(t.shape)) for name, t in params.items()]
            found = [(spec.name, spec.shape) for spec in manifest.params]
            if expected != found:
                raise CheckpointError(
                    f"{path}: parámetros {found} no corresponden al modelo {expected}."
                )
            for tensor in params.values():
                tensor.data = load_tensor(stream).data.astype(tensor.dtype)
    except OSError as error:
        raise CheckpointError(f"No se pudo leer el checkpoint {path}: {error}") from error
    except ValidationError as error:
        raise CheckpointError(
            f"{path}: manifiesto inválido {serialize_validation_errors(error.errors())}"
        ) from error
    except (ValueError, NumcoreError) as error:
        raise CheckpointError(f"{path}: checkpoint corrupto: {error}") from error
    return model, manifest.config
