"""Entrenamiento, evaluación, experimentos y CLI."""


class HarnessError(Exception):
    """Excepción base del arnés."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ConfigError(HarnessError):
    """Configuración inválida o incompatible con el checkpoint."""


class NonFiniteLossError(HarnessError):
    """La pérdida de entrenamiento dejó de ser finita."""


class CheckpointError(HarnessError):
    """Checkpoint ilegible o que no corresponde al modelo."""
