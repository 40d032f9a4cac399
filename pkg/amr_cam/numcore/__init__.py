"""Motor tensorial mínimo con diferenciación en modo reverso."""


class NumcoreError(Exception):
    """Excepción base del motor numérico."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DimensionError(NumcoreError, ValueError):
    """Las formas de los operandos no son compatibles con la operación."""


class GraphStateError(NumcoreError):
    """El grafo no está en un estado que permita la operación pedida."""


class NonFiniteError(NumcoreError, FloatingPointError):
    """Aparecieron NaN o Inf en un tensor."""


class OptimizerStateError(NumcoreError):
    """Un parámetro no tiene gradiente o su buffer no coincide."""
