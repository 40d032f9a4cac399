"""Utilidades para logger."""

# pylint: disable=too-few-public-methods
import logging
from typing import Optional


class LoggerMixin:
    """Clase base para proveer logging a los componentes de larga duración."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        """
        Inicializa la clase base con un logger opcional.

        Parameters:
            logger: Instancia de logging.Logger; por defecto uno con el nombre
                de la clase bajo el espacio `amr_cam`.
        """
        self.logger = logger or logging.getLogger(f"amr_cam.{self.__class__.__name__}")


def configure_logging(level: str = "INFO") -> None:
    """Configura el logger raíz una sola vez, para la CLI."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
