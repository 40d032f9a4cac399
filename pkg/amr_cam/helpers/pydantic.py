"""Helpers relacionados con pydantic."""

import json
from typing import Any, Sequence

from pydantic_core import ErrorDetails


def _custom_serializer(obj: Any) -> Any:
    """
    Serializador para objetos que json no maneja por defecto.

    Args:
        obj: El objeto a serializar.

    Returns:
        Una representación serializable del objeto.
    """
    if isinstance(obj, Exception):
        return {
            "error_type": type(obj).__name__,
            "error_message": str(obj),
        }
    return str(obj)


def serialize_validation_errors(errors: Sequence[ErrorDetails]) -> str:
    """
    Serializa errores de validación en una sola línea JSON.

    Solo conserva ubicación, mensaje y valor de entrada, que es lo que
    necesita un usuario para corregir un archivo de configuración.

    Args:
        errors: Errores de `ValidationError.errors()`.

    Returns:
        Cadena JSON sin saltos de línea.
    """
    compact = [
        {
            "loc": ".".join(str(part) for part in error.get("loc", ())),
            "msg": error.get("msg", ""),
            "input": error.get("input"),
        }
        for error in errors
    ]
    return json.dumps(compact, default=_custom_serializer, ensure_ascii=False)
