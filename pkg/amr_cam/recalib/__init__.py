"""Recalibración de CAMs y extracción de pseudo-etiquetas."""


class CoefficientError(ValueError):
    """El coeficiente de recalibración está fuera de [0, 1]."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
