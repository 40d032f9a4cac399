"""
Carga de la configuración de una corrida.

El archivo es texto plano `clave=valor`, una por línea, con comentarios `#`.
Los campos anidados se escriben con puntos (`dataset.n_classes=5`,
`modulation.kind=threshold`) y las listas separadas por comas
(`model.widths=16,32,64,64`). `none` deja un campo opcional vacío.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from amr_cam.harness import ConfigError
from amr_cam.helpers.pydantic import serialize_validation_errors
from amr_cam.models.schemas import RunConfig

logger = logging.getLogger(__name__)

Value = Union[str, None, list]


def _parse_value(raw: str) -> Value:
    text = raw.strip()
    if text.lower() in ("none", "null"):
        return None
    if "," in text:
        return [part.strip() for part in text.split(",") if part.strip()]
    return text


def parse_assignment(line: str, origin: str = "<override>") -> Tuple[str, Value]:
    """Separa `clave=valor`; el valor queda como texto para que pydantic lo convierta."""
    if "=" not in line:
        raise ConfigError(f"{origin}: se esperaba clave=valor, llegó '{line}'.")
    key, raw = line.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"{origin}: clave vacía en '{line}'.")
    return key, _parse_value(raw)


def read_config_file(path: Path) -> Dict[str, Value]:
    """Asignaciones planas de un archivo de configuración, en orden."""
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as error:
        raise ConfigError(f"No se pudo leer la configuración {path}: {error}") from error
    assignments: Dict[str, Value] = {}
    for number, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, value = parse_assignment(content, f"{path}:{number}")
        assignments[key] = value
    return assignments


def nest(assignments: Dict[str, Value]) -> Dict[str, Any]:
    """Convierte claves con puntos en diccionarios anidados."""
    nested: Dict[str, Any] = {}
    for dotted, value in assignments.items():
        parts = dotted.split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"'{dotted}' choca con un valor escalar ya asignado.")
            node = child
        node[parts[-1]] = value
    return nested


def build_config(data: Dict[str, Any]) -> RunConfig:
    """
    Valida un diccionario anidado como RunConfig.

    Raises:
        ConfigError: Con el detalle de validación serializado en una línea.
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as error:
        raise ConfigError(
            f"Configuración inválida: {serialize_validation_errors(error.errors())}"
        ) from error


def load_run_config(
    path: Optional[Path] = None,
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
) -> RunConfig:
    """
    Archivo, luego `--set clave=valor` y por último `--seed`.

    Parameters:
        path: Archivo de configuración opcional.
        overrides: Asignaciones que sobrescriben el archivo.
        seed: Semilla de la corrida; gana sobre archivo y overrides.
    """
    assignments: Dict[str, Value] = {} if path is None else read_config_file(path)
    for override in overrides:
        key, value = parse_assignment(override)
        assignments[key] = value
    if seed is not None:
        assignments["seed"] = str(seed)
    config = build_config(nest(assignments))
    logger.debug("configuración efectiva: %s", config.model_dump_json())
    return config


def with_overrides(config: RunConfig, overrides: Sequence[str]) -> RunConfig:
    """Aplica asignaciones `clave=valor` sobre una configuración ya validada."""
    if not overrides:
        return config
    data = config.model_dump(mode="json")
    for override in overrides:
        key, value = parse_assignment(override)
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return build_config(data)
