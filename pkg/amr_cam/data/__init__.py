"""Conjunto sintético multi-etiqueta con máscaras de referencia."""


class GenerationError(Exception):
    """No se pudo ubicar un objeto en la imagen tras los reintentos."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
